#include "intentgan/ssgan.hpp"

#include <numeric>

namespace intentgan {

void NoiseSpec::validate() const {
    if (dim < 1) throw ConfigError("noise dim must be >= 1");
    if (!(stddev > 0.0) || !std::isfinite(stddev)) throw ConfigError("noise stddev must be > 0");
    if (!std::isfinite(mean)) throw ConfigError("noise mean must be finite");
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be > 0");
    if (generator_lr && !(*generator_lr >= 0.0)) throw ConfigError("generator_lr must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (generator_hidden < 1 || discriminator_hidden < 1) throw ConfigError("hidden sizes must be >= 1");
    if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
        throw ConfigError("labeled_fraction must be in (0, 1]");
    }
    noise.validate();
}

GanModel init_gan(std::size_t feature_dim, std::size_t num_classes, const TrainConfig& config) {
    config.validate();
    if (feature_dim < 1) throw ConfigError("feature dim must be >= 1");
    if (num_classes < 1) throw ConfigError("need at least one class");
    const Rng root(config.seed);
    Rng g_rng = root.split("init/generator");
    Rng d_rng = root.split("init/discriminator");
    GanModel model;
    model.feature_dim = feature_dim;
    model.num_classes = num_classes;
    model.config = config;
    model.generator = nn::init_mlp<float>(
        {{config.noise.dim, config.generator_hidden, feature_dim}, config.dropout, nn::kLeakySlope},
        g_rng);
    model.discriminator = nn::init_mlp<float>(
        {{feature_dim, config.discriminator_hidden, num_classes + 1}, config.dropout, nn::kLeakySlope},
        d_rng);
    return model;
}

Eigen::MatrixXd predict(const GanModel& model, const FeatureMatrix& features) {
    Rng unused(0);
    const auto cache = nn::forward(model.discriminator, nn::Matrix<float>(features), nn::Mode::eval, unused);
    return real_class_probabilities(cache.output);
}

Eigen::VectorXd predict(const GanModel& model, const FeatureVector& feature) {
    const FeatureMatrix row = feature.transpose();
    return predict(model, row).row(0).transpose();
}

std::vector<std::size_t> argmax_rows(const Eigen::MatrixXd& probabilities) {
    std::vector<std::size_t> out(static_cast<std::size_t>(probabilities.rows()));
    for (Eigen::Index r = 0; r < probabilities.rows(); ++r) {
        Eigen::Index best = 0;
        probabilities.row(r).maxCoeff(&best);
        out[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
    }
    return out;
}

double accuracy(const Eigen::MatrixXd& probabilities, std::span<const std::size_t> labels) {
    if (labels.empty()) return 0.0;
    const auto preds = argmax_rows(probabilities);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += preds[i] == labels[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

TrainingSet make_training_set(const FeatureSource& source, const DatasetBundle& bundle,
                              const SemiSupervisedView& view) {
    check_binding(source, bundle);
    TrainingSet data;
    data.num_classes = bundle.num_classes();
    const auto train_ids = bundle.ids_in(Split::train);
    const auto val_ids = bundle.ids_in(Split::validation);
    data.train_features = gather_features(source, bundle, train_ids);
    data.validation_features = gather_features(source, bundle, val_ids);
    for (auto id : train_ids) {
        const bool labeled = std::binary_search(view.labeled_ids.begin(), view.labeled_ids.end(), id);
        data.train_labels.push_back(labeled ? bundle.utterances[id].label : std::nullopt);
    }
    for (auto id : val_ids) data.validation_labels.push_back(*bundle.utterances[id].label);
    return data;
}

namespace {

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
    FeatureMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

struct LabeledRows {
    FeatureMatrix features;
    std::vector<std::size_t> labels;
};

LabeledRows labeled_rows(const TrainingSet& data) {
    std::vector<std::size_t> rows;
    LabeledRows out;
    for (std::size_t i = 0; i < data.train_labels.size(); ++i) {
        if (data.train_labels[i]) {
            rows.push_back(i);
            out.labels.push_back(*data.train_labels[i]);
        }
    }
    out.features = select_rows(data.train_features, rows);
    return out;
}

void check_training_set(const TrainingSet& data) {
    if (static_cast<std::size_t>(data.train_features.rows()) != data.train_labels.size()) {
        throw DataError("training set: one label slot per train row required");
    }
    if (static_cast<std::size_t>(data.validation_features.rows()) != data.validation_labels.size()) {
        throw DataError("training set: one label per validation row required");
    }
    for (const auto& y : data.train_labels) {
        if (y && *y >= data.num_classes) throw DataError("training set: label out of range");
    }
    for (auto y : data.validation_labels) {
        if (y >= data.num_classes) throw DataError("training set: label out of range");
    }
}

std::string coordinates(std::size_t epoch, std::size_t batch) {
    return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ": ";
}

}  // namespace

TrainResult train(const TrainingSet& data, const TrainConfig& config) {
    check_training_set(data);
    TrainResult result;
    result.model = init_gan(static_cast<std::size_t>(data.train_features.cols()), data.num_classes, config);
    auto& gen = result.model.generator;
    auto& disc = result.model.discriminator;
    if (config.epochs == 0 || data.train_features.rows() == 0) return result;

    const Rng root(config.seed);
    Rng shuffle_rng = root.split("shuffle");
    Rng noise_rng = root.split("noise");
    Rng dropout_rng = root.split("dropout");
    auto d_opt = nn::make_adam(disc, config.lr);
    auto g_opt = nn::make_adam(gen, config.effective_generator_lr());

    const auto labeled = labeled_rows(data);
    std::vector<std::size_t> order(static_cast<std::size_t>(data.train_features.rows()));

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(std::span<std::size_t>(order));

        EpochLog log;
        log.epoch = epoch;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batches) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<std::size_t> labeled_idx;
            std::vector<std::size_t> unlabeled_idx;
            std::vector<std::size_t> labels;
            for (std::size_t i = start; i < end; ++i) {
                const auto& y = data.train_labels[order[i]];
                if (y) {
                    labeled_idx.push_back(order[i]);
                    labels.push_back(*y);
                } else {
                    unlabeled_idx.push_back(order[i]);
                }
            }
            const nn::Matrix<float> real_labeled = select_rows(data.train_features, labeled_idx);
            const nn::Matrix<float> real_unlabeled = select_rows(data.train_features, unlabeled_idx);

            try {
                const auto noise = sample_noise<float>(config.batch_size, config.noise, noise_rng);
                const nn::Matrix<float> fake =
                    nn::forward(gen, noise, nn::Mode::train, dropout_rng).output;
                const auto d_step = d_loss(disc, real_labeled, labels, real_unlabeled, fake,
                                           nn::Mode::train, dropout_rng);
                if (!std::isfinite(d_step.loss.total())) throw NumericError("non-finite discriminator loss");
                nn::adam_step(disc, d_step.grads, d_opt);

                const auto real_all = nn::vstack<float>({&real_labeled, &real_unlabeled});
                const auto real_cache = nn::forward(disc, real_all, nn::Mode::train, dropout_rng);
                const nn::Vector<float> real_mean =
                    real_cache.penultimate().colwise().mean().transpose();
                const auto noise_g = sample_noise<float>(config.batch_size, config.noise, noise_rng);
                const auto g_step = g_loss(disc, gen, real_mean, noise_g, nn::Mode::train, dropout_rng);
                if (!std::isfinite(g_step.loss.total())) throw NumericError("non-finite generator loss");
                nn::adam_step(gen, g_step.grads, g_opt);

                log.l_sup += d_step.loss.sup;
                log.l_unsup_real += d_step.loss.unsup_real;
                log.l_unsup_fake += d_step.loss.unsup_fake;
                log.l_fm += g_step.loss.feature_matching;
                log.l_fool += g_step.loss.fool;
            } catch (const NumericError& e) {
                throw NumericError(coordinates(epoch, batches) + e.what());
            }
        }
        const auto n = static_cast<double>(batches);
        log.l_sup /= n;
        log.l_unsup_real /= n;
        log.l_unsup_fake /= n;
        log.l_fm /= n;
        log.l_fool /= n;
        log.l_d = log.l_sup + log.l_unsup_real + log.l_unsup_fake;
        log.l_g = log.l_fm + log.l_fool;
        log.train_accuracy = accuracy(predict(result.model, labeled.features), labeled.labels);
        if (data.validation_features.rows() > 0) {
            log.validation_accuracy =
                accuracy(predict(result.model, data.validation_features), data.validation_labels);
        }
        result.logs.push_back(log);
    }
    return result;
}

BaselineResult train_supervised_baseline(const TrainingSet& data, const TrainConfig& config) {
    config.validate();
    check_training_set(data);
    const Rng root(config.seed);
    Rng init_rng = root.split("init/discriminator");
    Rng shuffle_rng = root.split("shuffle");
    Rng dropout_rng = root.split("dropout");
    BaselineResult result;
    result.head = nn::init_mlp<float>({{static_cast<std::size_t>(data.train_features.cols()),
                                        config.discriminator_hidden, data.num_classes},
                                       config.dropout,
                                       nn::kLeakySlope},
                                      init_rng);
    auto opt = nn::make_adam(result.head, config.lr);
    const auto labeled = labeled_rows(data);
    std::vector<std::size_t> order(labeled.labels.size());
    for (std::size_t epoch = 0; epoch < config.epochs && !order.empty(); ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batches) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const nn::Matrix<float> x = select_rows(labeled.features, idx);
            std::vector<std::size_t> y;
            for (auto i : idx) y.push_back(labeled.labels[i]);
            try {
                const auto cache = nn::forward(result.head, x, nn::Mode::train, dropout_rng);
                const auto xent = nn::softmax_xent(cache.output, y);
                if (!std::isfinite(xent.loss)) throw NumericError("non-finite baseline loss");
                nn::adam_step(result.head, nn::backward(result.head, cache, xent.grad), opt);
                total += xent.loss;
            } catch (const NumericError& e) {
                throw NumericError(coordinates(epoch, batches) + e.what());
            }
        }
        result.epoch_losses.push_back(total / static_cast<double>(batches));
    }
    return result;
}

Eigen::MatrixXd predict_baseline(const nn::Mlp<float>& head, const FeatureMatrix& features) {
    Rng unused(0);
    const auto cache = nn::forward(head, nn::Matrix<float>(features), nn::Mode::eval, unused);
    Eigen::MatrixXd out(cache.output.rows(), cache.output.cols());
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double lse = nn::logsumexp(cache.output.row(r));
        out.row(r) = (cache.output.row(r).cast<double>().array() - lse).exp().matrix();
    }
    return out;
}

}  // namespace intentgan
