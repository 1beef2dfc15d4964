#include "intentgan/commands.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "intentgan/checkpoint.hpp"
#include "intentgan/errors.hpp"
#include "json.hpp"

namespace intentgan::commands {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

double round9(double v) { return std::strtod(format_number(v).c_str(), nullptr); }

void write_text(const std::string& text, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::optional<LabelVocab> vocab_from(const std::optional<fs::path>& class_list) {
    if (!class_list) return std::nullopt;
    return LabelVocab(read_class_list(*class_list));
}

FeatureSource feature_source(const RunConfig& config, const std::optional<HashedNgramConfig>& encoder) {
    if (config.embeddings) return load_embeddings(*config.embeddings);
    return encoder.value_or(config.encoder);
}

}  // namespace

DatasetBundle prepare_data(const fs::path& clinc_json, const fs::path& class_list,
                           const fs::path& jsonl_out, std::size_t min_tokens) {
    const auto source = load_clinc_json(clinc_json);
    const auto selected = select_classes(source, read_class_list(class_list));
    auto cleaned = clean_min_length(selected, min_tokens);
    save_canonical_jsonl(cleaned, jsonl_out);
    return cleaned;
}

SemiSupervisedView mask_labels(const fs::path& dataset, const std::optional<fs::path>& class_list,
                               double labeled_fraction, std::uint64_t seed, const fs::path& out) {
    const auto bundle = load_canonical_jsonl(dataset, vocab_from(class_list));
    const auto view = intentgan::mask_labels(bundle, labeled_fraction, seed);
    ordered_json j;
    j["labeled_fraction"] = round9(labeled_fraction);
    j["seed"] = seed;
    j["labeled_ids"] = view.labeled_ids;
    j["unlabeled_ids"] = view.unlabeled_ids;
    write_text(j.dump() + "\n", out);
    return view;
}

SemiSupervisedView read_mask_file(const fs::path& path) {
    try {
        const auto j = json::parse(read_text(path));
        SemiSupervisedView view;
        view.labeled_ids = j.at("labeled_ids").get<std::vector<std::size_t>>();
        view.unlabeled_ids = j.at("unlabeled_ids").get<std::vector<std::size_t>>();
        std::sort(view.labeled_ids.begin(), view.labeled_ids.end());
        std::sort(view.unlabeled_ids.begin(), view.unlabeled_ids.end());
        return view;
    } catch (const json::exception& e) {
        throw DataError("mask file '" + path.string() + "': " + e.what());
    }
}

TrainResult train(const RunConfig& config) {
    const auto bundle = load_canonical_jsonl(config.dataset, vocab_from(config.class_list));
    const auto source = feature_source(config, std::nullopt);
    const auto view = config.mask_file ? read_mask_file(*config.mask_file)
                                       : intentgan::mask_labels(bundle, config.train.labeled_fraction,
                                                                config.train.seed);
    const auto data = make_training_set(source, bundle, view);
    auto result = intentgan::train(data, config.train);
    result.model.class_names = bundle.vocab.names();
    if (std::holds_alternative<HashedNgramConfig>(source)) result.model.encoder = config.encoder;

    ensure_dir(config.output_dir);
    save_checkpoint(result.model, config.output_dir / kCheckpointFile);
    export_curves(result.logs, config.output_dir / kCurvesFile);
    write_text(resolved_config_json(config), config.output_dir / kResolvedConfigFile);
    return result;
}

std::string metrics_json(const MetricsReport& r, const LabelVocab& vocab, Split split,
                         std::int64_t examples) {
    ordered_json j;
    j["split"] = std::string(to_string(split));
    j["examples"] = examples;
    j["averaging"] = "macro";
    j["accuracy"] = round9(r.accuracy);
    j["precision"] = round9(r.macro_precision);
    j["recall"] = round9(r.macro_recall);
    j["f1"] = round9(r.macro_f1);
    j["mcc"] = round9(r.mcc);
    j["weighted_precision"] = round9(r.weighted_precision);
    j["weighted_recall"] = round9(r.weighted_recall);
    j["weighted_f1"] = round9(r.weighted_f1);
    ordered_json per_class = ordered_json::array();
    for (std::size_t k = 0; k < vocab.size(); ++k) {
        ordered_json c;
        c["class"] = vocab.name(k);
        c["precision"] = round9(r.precision[k]);
        c["recall"] = round9(r.recall[k]);
        c["f1"] = round9(r.f1[k]);
        per_class.push_back(std::move(c));
    }
    j["per_class"] = std::move(per_class);
    return j.dump(2) + "\n";
}

MetricsReport evaluate(const RunConfig& config, const fs::path& checkpoint) {
    const auto model = load_checkpoint(checkpoint);
    std::optional<LabelVocab> vocab = vocab_from(config.class_list);
    if (!vocab && !model.class_names.empty()) vocab = LabelVocab(model.class_names);
    const auto bundle = load_canonical_jsonl(config.dataset, vocab);
    if (bundle.num_classes() != model.num_classes) {
        throw CheckpointError("checkpoint: shape mismatch, checkpoint has K=" +
                              std::to_string(model.num_classes) + " but dataset has K=" +
                              std::to_string(bundle.num_classes()));
    }
    const auto source = feature_source(config, model.encoder);
    check_binding(source, bundle);
    if (feature_dim(source) != model.feature_dim) {
        throw BindingError("feature dim " + std::to_string(feature_dim(source)) +
                           " does not match checkpoint dim " + std::to_string(model.feature_dim));
    }

    const auto ids = bundle.ids_in(config.eval_split);
    const auto probs = predict(model, gather_features(source, bundle, ids));
    const auto preds = argmax_rows(probs);
    std::vector<std::size_t> truths;
    for (auto id : ids) truths.push_back(*bundle.utterances[id].label);
    const auto cm = confusion(preds, truths, bundle.num_classes());
    const auto r = report(cm);

    ensure_dir(config.output_dir);
    write_text(metrics_json(r, bundle.vocab, config.eval_split, cm.total()), config.output_dir / kMetricsFile);
    export_confusion_csv(cm, bundle.vocab, config.output_dir / kConfusionFile);
    std::string lines;
    for (const auto& rec : misclass_records(probs, bundle, ids)) {
        ordered_json j;
        j["id"] = rec.id;
        j["text"] = rec.text;
        j["true"] = bundle.vocab.name(rec.true_class);
        j["predicted"] = bundle.vocab.name(rec.predicted);
        j["prob"] = round9(rec.p_predicted);
        j["runner_up"] = bundle.vocab.name(rec.runner_up);
        j["runner_up_prob"] = round9(rec.p_runner_up);
        lines += j.dump() + "\n";
    }
    write_text(lines, config.output_dir / kMisclassifiedFile);
    return r;
}

std::size_t predict(const fs::path& checkpoint, std::istream& texts, std::ostream& out) {
    const auto model = load_checkpoint(checkpoint);
    if (!model.encoder) {
        throw ConfigError("checkpoint was trained on precomputed embeddings; text prediction needs "
                          "a model trained with the hashed encoder");
    }
    std::size_t count = 0;
    std::string line;
    while (std::getline(texts, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const Eigen::VectorXd p = predict(model, encode_hashed(line, *model.encoder));
        Eigen::Index best = 0;
        p.maxCoeff(&best);
        std::optional<Eigen::Index> second;
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            if (k == best) continue;
            if (!second || p(k) > p(*second)) second = k;
        }
        auto name = [&model](Eigen::Index k) {
            const auto kk = static_cast<std::size_t>(k);
            return kk < model.class_names.size() ? model.class_names[kk] : std::to_string(kk);
        };
        ordered_json j;
        j["text"] = line;
        j["intent"] = name(best);
        j["prob"] = round9(p(best));
        j["runner_up"] = second ? ordered_json(name(*second)) : ordered_json(nullptr);
        j["runner_up_prob"] = second ? ordered_json(round9(p(*second))) : ordered_json(nullptr);
        out << j.dump() << '\n';
        ++count;
    }
    return count;
}

void export_report(const fs::path& output_dir) {
    std::ostringstream md;
    md << "# Run report\n\n";
    const auto metrics_path = output_dir / kMetricsFile;
    if (fs::exists(metrics_path)) {
        ordered_json m;
        try {
            m = ordered_json::parse(read_text(metrics_path));
        } catch (const json::exception& e) {
            throw DataError(metrics_path.string() + ": " + e.what());
        }
        md << "## Metrics (" << m.value("split", std::string("test")) << ", "
           << m.value("examples", 0) << " examples, " << m.value("averaging", std::string("macro"))
           << " averaging)\n\n";
        md << "| Accuracy (%) | Precision | Recall | F1 | MCC |\n|---|---|---|---|---|\n";
        char row[256];
        std::snprintf(row, sizeof row, "| %.2f | %.4f | %.4f | %.4f | %.4f |\n\n",
                      100.0 * m.value("accuracy", 0.0), m.value("precision", 0.0),
                      m.value("recall", 0.0), m.value("f1", 0.0), m.value("mcc", 0.0));
        md << row;
        md << "| Class | Precision | Recall | F1 |\n|---|---|---|---|\n";
        for (const auto& c : m.value("per_class", ordered_json::array())) {
            std::snprintf(row, sizeof row, " | %.4f | %.4f | %.4f |\n", c.value("precision", 0.0),
                          c.value("recall", 0.0), c.value("f1", 0.0));
            md << "| " << c.value("class", std::string()) << row;
        }
        md << "\n";
    }
    const auto curves_path = output_dir / kCurvesFile;
    if (fs::exists(curves_path)) {
        const auto logs = read_curves(curves_path);
        md << "## Training curves\n\n" << logs.size() << " epochs";
        if (!logs.empty()) {
            const auto& last = logs.back();
            md << "; final L_D " << format_number(last.l_d) << ", L_G " << format_number(last.l_g)
               << ", train accuracy " << format_number(last.train_accuracy);
            if (last.validation_accuracy) md << ", validation accuracy " << format_number(*last.validation_accuracy);
        }
        md << ".\n\n";
    }
    const auto mis_path = output_dir / kMisclassifiedFile;
    if (fs::exists(mis_path)) {
        md << "## Misclassified samples\n\n"
           << "| Sample | Target | Predicted | P(predicted) | Nearest | P(nearest) |\n"
           << "|---|---|---|---|---|---|\n";
        std::istringstream in(read_text(mis_path));
        std::string line;
        std::size_t shown = 0;
        while (std::getline(in, line) && shown < 20) {
            if (line.empty()) continue;
            const auto r = json::parse(line, nullptr, false);
            if (r.is_discarded()) throw DataError(mis_path.string() + ": malformed line");
            char probs[64];
            md << "| " << r.value("text", std::string()) << " | " << r.value("true", std::string())
               << " | " << r.value("predicted", std::string()) << " | ";
            std::snprintf(probs, sizeof probs, "%.2f", r.value("prob", 0.0));
            md << probs << " | " << r.value("runner_up", std::string()) << " | ";
            std::snprintf(probs, sizeof probs, "%.2f", r.value("runner_up_prob", 0.0));
            md << probs << " |\n";
            ++shown;
        }
        md << "\n";
    }
    write_text(md.str(), output_dir / kReportFile);
}

}  // namespace intentgan::commands
