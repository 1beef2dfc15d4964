#include "intentgan/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "intentgan/errors.hpp"

namespace intentgan {

ConfusionMatrix confusion(std::span<const std::size_t> predictions,
                          std::span<const std::size_t> truths, std::size_t num_classes) {
    if (predictions.size() != truths.size()) {
        throw DataError("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(truths.size()) + " truths");
    }
    const auto k = static_cast<Eigen::Index>(num_classes);
    ConfusionMatrix cm{CountMatrix::Zero(k, k)};
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i] >= num_classes || predictions[i] >= num_classes) {
            throw DataError("confusion: class index out of range at position " + std::to_string(i));
        }
        ++cm.counts(static_cast<Eigen::Index>(truths[i]), static_cast<Eigen::Index>(predictions[i]));
    }
    return cm;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

MetricsReport report(const ConfusionMatrix& cm) {
    const auto k = cm.counts.rows();
    const auto counts = cm.counts.cast<double>();
    const double s = counts.sum();
    if (k == 0 || s == 0.0) throw DataError("report: confusion matrix is empty");
    const Eigen::VectorXd t = counts.rowwise().sum();
    const Eigen::VectorXd p = counts.colwise().sum().transpose();
    const double c = counts.trace();

    MetricsReport r;
    r.accuracy = c / s;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double prec = ratio(counts(j, j), p(j));
        const double rec = ratio(counts(j, j), t(j));
        r.precision.push_back(prec);
        r.recall.push_back(rec);
        r.f1.push_back(ratio(2.0 * prec * rec, prec + rec));
    }
    const double kd = static_cast<double>(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        r.macro_precision += r.precision[jj] / kd;
        r.macro_recall += r.recall[jj] / kd;
        r.macro_f1 += r.f1[jj] / kd;
        r.weighted_precision += r.precision[jj] * t(j) / s;
        r.weighted_recall += r.recall[jj] * t(j) / s;
        r.weighted_f1 += r.f1[jj] * t(j) / s;
    }
    const double cov_xy = c * s - p.dot(t);
    const double cov_xx = s * s - p.squaredNorm();
    const double cov_yy = s * s - t.squaredNorm();
    const double den = std::sqrt(cov_xx * cov_yy);
    r.mcc = den == 0.0 ? 0.0 : cov_xy / den;
    return r;
}

std::vector<MisclassRecord> misclass_records(const Eigen::MatrixXd& probabilities,
                                             const DatasetBundle& bundle,
                                             std::span<const std::size_t> ids) {
    if (static_cast<std::size_t>(probabilities.rows()) != ids.size()) {
        throw DataError("misclass_records: one probability row per id required");
    }
    std::vector<MisclassRecord> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& u = bundle.utterances.at(ids[i]);
        if (!u.label) continue;
        const Eigen::VectorXd row = probabilities.row(static_cast<Eigen::Index>(i)).transpose();
        std::vector<std::size_t> order(static_cast<std::size_t>(row.size()));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&row](std::size_t a, std::size_t b) {
            return row(static_cast<Eigen::Index>(a)) > row(static_cast<Eigen::Index>(b));
        });
        if (order.empty() || order[0] == *u.label) continue;
        MisclassRecord rec;
        rec.id = u.id;
        rec.text = u.text;
        rec.true_class = *u.label;
        rec.predicted = order[0];
        rec.p_predicted = row(static_cast<Eigen::Index>(order[0]));
        if (order.size() > 1) {
            rec.runner_up = order[1];
            rec.p_runner_up = row(static_cast<Eigen::Index>(order[1]));
        }
        out.push_back(std::move(rec));
    }
    std::stable_sort(out.begin(), out.end(), [](const MisclassRecord& a, const MisclassRecord& b) {
        return a.p_predicted > b.p_predicted;
    });
    return out;
}

std::vector<MisclassRecord> misclass_report(const GanModel& model, const DatasetBundle& bundle,
                                            Split split, const FeatureSource& source) {
    if (model.num_classes != bundle.num_classes()) {
        throw BindingError("model has K=" + std::to_string(model.num_classes) + " but dataset has K=" +
                           std::to_string(bundle.num_classes()));
    }
    const auto ids = bundle.ids_in(split);
    const auto features = gather_features(source, bundle, ids);
    return misclass_records(predict(model, features), bundle, ids);
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

namespace {

constexpr const char* kCurvesHeader =
    "epoch,l_sup,l_unsup_real,l_unsup_fake,l_d,l_fm,l_fool,l_g,train_accuracy,validation_accuracy";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

double parse_double(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw DataError("curves CSV line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string format_curves(std::span<const EpochLog> logs) {
    std::string out = std::string(kCurvesHeader) + "\n";
    for (const auto& l : logs) {
        out += std::to_string(l.epoch);
        for (double v : {l.l_sup, l.l_unsup_real, l.l_unsup_fake, l.l_d, l.l_fm, l.l_fool, l.l_g,
                         l.train_accuracy}) {
            out += "," + format_number(v);
        }
        out += ",";
        if (l.validation_accuracy) out += format_number(*l.validation_accuracy);
        out += "\n";
    }
    return out;
}

void export_curves(std::span<const EpochLog> logs, const std::filesystem::path& path) {
    write_text(format_curves(logs), path);
}

std::vector<EpochLog> parse_curves(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line) || line != kCurvesHeader) throw DataError("curves CSV: bad header");
    std::vector<EpochLog> logs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10) throw DataError("curves CSV line " + std::to_string(line_no) + ": expected 10 fields");
        EpochLog l;
        l.epoch = static_cast<std::size_t>(parse_double(f[0], line_no));
        double* slots[] = {&l.l_sup, &l.l_unsup_real, &l.l_unsup_fake, &l.l_d,
                           &l.l_fm,  &l.l_fool,       &l.l_g,          &l.train_accuracy};
        for (std::size_t i = 0; i < 8; ++i) *slots[i] = parse_double(f[i + 1], line_no);
        if (!f[9].empty()) l.validation_accuracy = parse_double(f[9], line_no);
        logs.push_back(l);
    }
    return logs;
}

std::vector<EpochLog> read_curves(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_curves(buf.str());
}

std::string format_confusion_csv(const ConfusionMatrix& cm, const LabelVocab& vocab) {
    if (vocab.size() != cm.num_classes()) throw DataError("confusion CSV: vocab size does not match K");
    std::string out = "true\\predicted";
    for (const auto& n : vocab.names()) out += "," + csv_field(n);
    out += "\n";
    for (Eigen::Index i = 0; i < cm.counts.rows(); ++i) {
        out += csv_field(vocab.name(static_cast<std::size_t>(i)));
        for (Eigen::Index j = 0; j < cm.counts.cols(); ++j) out += "," + std::to_string(cm.counts(i, j));
        out += "\n";
    }
    return out;
}

void export_confusion_csv(const ConfusionMatrix& cm, const LabelVocab& vocab,
                          const std::filesystem::path& path) {
    write_text(format_confusion_csv(cm, vocab), path);
}

}  // namespace intentgan
