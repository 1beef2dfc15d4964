#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "intentgan/errors.hpp"
#include "intentgan/ssgan.hpp"
#include "support.hpp"

using namespace intentgan;
using nn::Matrix;
using nn::Mode;

namespace {

Matrix<double> random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Matrix<double> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

nn::Mlp<double> identity_disc(std::size_t width) {
    nn::Mlp<double> d{{{width, width}, 0.0, nn::kLeakySlope}, {}};
    d.layers.push_back({Matrix<double>::Identity(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(width)),
                        nn::Vector<double>::Zero(static_cast<Eigen::Index>(width))});
    return d;
}

TrainConfig small_config() {
    TrainConfig c;
    c.epochs = 5;
    c.batch_size = 32;
    c.noise.dim = 8;
    c.generator_hidden = 16;
    c.discriminator_hidden = 16;
    return c;
}

}  // namespace

TEST_CASE("sample_noise") {
    SUBCASE("mean of 1e5 draws with mu = 5, sigma = 1") {
        Rng rng(0);
        const auto z = sample_noise<double>(1000, {100, 5.0, 1.0}, rng);
        CHECK(z.rows() == 1000);
        CHECK(z.cols() == 100);
        CHECK(std::abs(z.mean() - 5.0) < 5e-3);
        const double var = (z.array() - z.mean()).square().mean();
        CHECK(var == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("same seed gives the same matrix") {
        Rng a(17), b(17);
        CHECK(sample_noise<float>(4, {}, a) == sample_noise<float>(4, {}, b));
    }
    SUBCASE("invalid specs") {
        Rng rng(0);
        CHECK_THROWS_AS(sample_noise<float>(4, {10, 0.0, 0.0}, rng), ConfigError);
        CHECK_THROWS_AS(sample_noise<float>(4, {0, 0.0, 1.0}, rng), ConfigError);
        CHECK_THROWS_AS(sample_noise<float>(0, {}, rng), ConfigError);
    }
}

TEST_CASE("stable ln(1 - p_fake) identity") {
    Rng rng(12);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto k = 2 + static_cast<Eigen::Index>(rng.below(30));
        const double scale = trial % 4 == 0 ? 100.0 : 5.0;
        Eigen::RowVectorXd row(k);
        for (auto& v : row) v = scale * (2.0 * rng.uniform() - 1.0);
        // direct evaluation in long double as an independent reference
        long double sum_all = 0.0L, sum_real = 0.0L;
        const long double m = row.maxCoeff();
        for (Eigen::Index j = 0; j < k; ++j) {
            const long double e = std::exp(static_cast<long double>(row(j)) - m);
            sum_all += e;
            if (j < k - 1) sum_real += e;
        }
        const long double direct = std::log(sum_real / sum_all);
        const double stable = log_not_fake(row);
        if (std::isfinite(static_cast<double>(direct))) CHECK(std::abs(stable - static_cast<double>(direct)) < 1e-10);
        CHECK(stable == doctest::Approx(nn::logsumexp(row.head(k - 1)) - nn::logsumexp(row)).epsilon(1e-15));
    }
    Eigen::RowVectorXd extreme(3);
    extreme << -100.0, -100.0, 100.0;
    CHECK(std::isfinite(log_not_fake(extreme)));
    CHECK(log_not_fake(extreme) == doctest::Approx(-200.0 + std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("d_loss unit values") {
    SUBCASE("uniform logits over 31 outputs") {
        const auto disc = identity_disc(31);
        const Matrix<double> zeros = Matrix<double>::Zero(3, 31);
        const std::vector<std::size_t> labels = {0, 7, 29};
        Rng rng(0);
        const auto s = d_loss(disc, zeros, labels, zeros, zeros, Mode::eval, rng);
        CHECK(s.loss.unsup_fake == doctest::Approx(3.4339872044851462459).epsilon(1e-12));
        CHECK(s.loss.unsup_real == doctest::Approx(0.032789822822990870516).epsilon(1e-12));
        CHECK(s.loss.sup == doctest::Approx(3.4339872044851462459).epsilon(1e-12));
        CHECK(s.loss.total() == doctest::Approx(s.loss.sup + s.loss.unsup_real + s.loss.unsup_fake));
    }
    SUBCASE("K = 3 instance against the high-precision reference") {
        const auto disc = identity_disc(4);
        Matrix<double> labeled(2, 4), unlabeled(2, 4), fake(2, 4);
        labeled << 1.0, -0.5, 0.25, -1.0, 0.0, 2.0, -1.0, 0.5;
        unlabeled << 0.3, 0.3, -0.2, 1.0, -1.5, 0.5, 2.5, -0.5;
        fake << 0.1, -0.2, 0.3, 1.2, 2.0, 1.0, 0.0, -1.0;
        const std::vector<std::size_t> labels = {0, 1};
        Rng rng(0);
        const auto s = d_loss(disc, labeled, labels, unlabeled, fake, Mode::eval, rng);
        // tests/oracles/compute_oracles.py, d_loss_case()
        CHECK(s.loss.sup == doctest::Approx(0.47356004430815589927).epsilon(1e-13));
        CHECK(s.loss.unsup_real == doctest::Approx(0.2159962748656137103).epsilon(1e-13));
        CHECK(s.loss.unsup_fake == doctest::Approx(2.0631656253001249248).epsilon(1e-13));
    }
    SUBCASE("empty labeled batch contributes zero supervised loss") {
        const auto disc = identity_disc(4);
        const Matrix<double> none(0, 4);
        const Matrix<double> x = Matrix<double>::Ones(2, 4);
        Rng rng(0);
        const auto s = d_loss(disc, none, {}, x, x, Mode::eval, rng);
        CHECK(s.loss.sup == 0.0);
        CHECK(s.loss.unsup_real > 0.0);
    }
    SUBCASE("supervised loss shrinks as the correct margin grows") {
        const auto disc = identity_disc(3);
        const Matrix<double> none(0, 3);
        const std::vector<std::size_t> label = {0};
        double previous = std::numeric_limits<double>::infinity();
        for (double margin : {0.0, 1.0, 5.0, 20.0, 100.0}) {
            Matrix<double> row(1, 3);
            row << margin, 0.0, 0.0;
            Rng rng(0);
            const double sup = d_loss(disc, row, label, none, none, Mode::eval, rng).loss.sup;
            CHECK(sup < previous);
            previous = sup;
        }
        CHECK(previous < 1e-40);
    }
    SUBCASE("bad labels") {
        const auto disc = identity_disc(4);
        const Matrix<double> x = Matrix<double>::Ones(1, 4);
        const Matrix<double> none(0, 4);
        Rng rng(0);
        const std::vector<std::size_t> fake_label = {3};
        CHECK_THROWS_AS(d_loss(disc, x, fake_label, none, none, Mode::eval, rng), DataError);
        CHECK_THROWS_AS(d_loss(disc, x, {}, none, none, Mode::eval, rng), DataError);
    }
}

TEST_CASE("g_loss unit values") {
    SUBCASE("uniform fake logits over 31 outputs and matching feature means") {
        const auto disc = identity_disc(31);
        nn::Mlp<double> gen{{{2, 31}, 0.0, nn::kLeakySlope}, {}};
        gen.layers.push_back({Matrix<double>::Zero(31, 2), nn::Vector<double>::Zero(31)});
        Rng rng(0);
        const auto noise = sample_noise<double>(4, {2, 0.0, 1.0}, rng);
        const auto s = g_loss(disc, gen, nn::Vector<double>(nn::Vector<double>::Zero(31)), noise, Mode::eval, rng);
        CHECK(s.loss.fool == doctest::Approx(0.032789822822990870516).epsilon(1e-12));
        CHECK(s.loss.feature_matching == 0.0);
        CHECK(s.loss.total() == doctest::Approx(s.loss.fool));
    }
    SUBCASE("feature matching is the squared distance of means") {
        const auto disc = identity_disc(3);
        nn::Mlp<double> gen{{{1, 3}, 0.0, nn::kLeakySlope}, {}};
        gen.layers.push_back({Matrix<double>::Zero(3, 1), nn::Vector<double>::Constant(3, 1.0)});
        Rng rng(0);
        const Matrix<double> noise = Matrix<double>::Zero(2, 1);
        nn::Vector<double> real(3);
        real << 1.0, 3.0, -1.0;
        const auto s = g_loss(disc, gen, real, noise, Mode::eval, rng);
        // the identity D has no hidden layer, so its penultimate features are its inputs
        CHECK(s.loss.feature_matching == doctest::Approx(0.0 + 4.0 + 4.0));
    }
}

TEST_CASE("GAN gradients agree with central differences") {
    Rng rng(31);
    int checked = 0;
    for (int trial = 0; checked < 12; ++trial) {
        const bool dropout = trial % 2 == 1;
        const std::size_t d = 3, k = 2, nz = 2;
        nn::MlpSpec dspec{{d, 4, k + 1}, dropout ? 0.25 : 0.0, nn::kLeakySlope};
        nn::MlpSpec gspec = trial < 6 ? nn::MlpSpec{{nz, d}, 0.0, nn::kLeakySlope}
                                      : nn::MlpSpec{{nz, 5, d}, dropout ? 0.25 : 0.0, nn::kLeakySlope};
        auto disc = nn::init_mlp<double>(dspec, rng);
        auto gen = nn::init_mlp<double>(gspec, rng);
        for (auto& l : disc.layers) l.bias = random_matrix(rng, l.bias.size(), 1, 0.1);
        for (auto& l : gen.layers) l.bias = random_matrix(rng, l.bias.size(), 1, 0.1);

        Matrix<double> labeled = random_matrix(rng, 2, d);
        Matrix<double> unlabeled = random_matrix(rng, 2, d);
        Matrix<double> fake = random_matrix(rng, 2, d);
        const std::vector<std::size_t> labels = {0, 1};
        const Rng mask = rng.split("d/" + std::to_string(trial));
        const nn::Vector<double> real_mean = random_matrix(rng, 4, 1, 0.5);
        Matrix<double> noise = random_matrix(rng, 3, nz);
        const Rng gmask = rng.split("g/" + std::to_string(trial));
        {
            Rng m = mask;
            const auto stacked = nn::vstack<double>({&labeled, &unlabeled, &fake});
            Rng g = gmask;
            const auto gc = nn::forward(gen, noise, Mode::train, g);
            const auto dc = nn::forward(disc, gc.output, Mode::train, g);
            const double margin = std::min({testing::min_abs_preactivation(nn::forward(disc, stacked, Mode::train, m)),
                                            testing::min_abs_preactivation(gc), testing::min_abs_preactivation(dc)});
            if (margin < 1e-2) continue;
        }
        ++checked;

        Rng r = mask;
        const auto ds = d_loss(disc, labeled, labels, unlabeled, fake, Mode::train, r);
        auto d_total = [&] {
            Rng m = mask;
            return d_loss(disc, labeled, labels, unlabeled, fake, Mode::train, m).loss.total();
        };
        CHECK(testing::max_fd_error(disc, ds.grads, d_total) < 1e-4);
        const Eigen::Index n_l = labeled.rows(), n_u = unlabeled.rows();
        CHECK(testing::max_fd_error(labeled, ds.grads.input.topRows(n_l), d_total) < 1e-4);
        CHECK(testing::max_fd_error(unlabeled, ds.grads.input.middleRows(n_l, n_u), d_total) < 1e-4);
        CHECK(testing::max_fd_error(fake, ds.grads.input.bottomRows(fake.rows()), d_total) < 1e-4);

        r = gmask;
        const auto gs = g_loss(disc, gen, real_mean, noise, Mode::train, r);
        auto g_total = [&] {
            Rng m = gmask;
            return g_loss(disc, gen, real_mean, noise, Mode::train, m).loss.total();
        };
        CHECK(testing::max_fd_error(gen, gs.grads, g_total) < 1e-4);
        CHECK(testing::max_fd_error(noise, gs.grads.input, g_total) < 1e-4);
    }
}

TEST_CASE("real-class probabilities") {
    SUBCASE("uniform logits give 1/K") {
        const Matrix<float> logits = Matrix<float>::Zero(2, 31);
        const auto p = real_class_probabilities(logits);
        CHECK(p.cols() == 30);
        CHECK((p.array() - 1.0 / 30.0).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("logits (2, 0, ..., 0) over 31 outputs") {
        Matrix<double> logits = Matrix<double>::Zero(1, 31);
        logits(0, 0) = 2.0;
        const auto p = real_class_probabilities(logits);
        // tests/oracles/compute_oracles.py, predict_case()
        CHECK(p(0, 0) == doctest::Approx(0.2030570971349759547).epsilon(1e-13));
        for (Eigen::Index j = 1; j < 30; ++j) CHECK(p(0, j) == doctest::Approx(0.027480789753966346389).epsilon(1e-13));
    }
    SUBCASE("dominant fake logit still gives a proper distribution") {
        Matrix<double> logits(1, 4);
        logits << 1.0, 2.0, 0.0, 2000.0;
        const auto p = real_class_probabilities(logits);
        CHECK(p.sum() == doctest::Approx(1.0));
        CHECK(p(0, 1) == doctest::Approx(std::exp(2.0) / (std::exp(1.0) + std::exp(2.0) + 1.0)));
    }
    SUBCASE("sums to one and keeps the argmax of the raw real logits") {
        Rng rng(44);
        for (int trial = 0; trial < 500; ++trial) {
            const auto k = 1 + static_cast<Eigen::Index>(rng.below(30));
            Matrix<float> logits(1, k + 1);
            for (Eigen::Index j = 0; j <= k; ++j) logits(0, j) = static_cast<float>(20.0 * rng.normal());
            const auto p = real_class_probabilities(logits);
            CHECK(std::abs(p.sum() - 1.0) < 1e-6);
            Eigen::Index raw = 0, renorm = 0;
            logits.row(0).head(k).maxCoeff(&raw);
            p.row(0).maxCoeff(&renorm);
            CHECK(raw == renorm);
        }
    }
}

TEST_CASE("training") {
    const auto blobs = testing::make_blobs(3, 6, 0.1, 1, 10, 20, 20);
    const auto config = small_config();

    SUBCASE("zero epochs leave the initial nets and an empty log") {
        auto c = config;
        c.epochs = 0;
        const auto r = train(blobs.train, c);
        const auto init = init_gan(6, 3, c);
        CHECK(r.logs.empty());
        CHECK(r.model.discriminator.layers[0].weight == init.discriminator.layers[0].weight);
        CHECK(r.model.generator.layers[1].weight == init.generator.layers[1].weight);
    }
    SUBCASE("same seed gives identical logs and parameters; another seed differs") {
        const auto a = train(blobs.train, config);
        const auto b = train(blobs.train, config);
        CHECK(a.logs == b.logs);
        for (std::size_t l = 0; l < 2; ++l) {
            CHECK(a.model.discriminator.layers[l].weight == b.model.discriminator.layers[l].weight);
            CHECK(a.model.generator.layers[l].bias == b.model.generator.layers[l].bias);
        }
        auto c = config;
        c.seed = 1;
        CHECK_FALSE(train(blobs.train, c).logs == a.logs);
    }
    SUBCASE("epoch logs satisfy the part-sum identities") {
        const auto r = train(blobs.train, config);
        REQUIRE(r.logs.size() == 5);
        for (std::size_t e = 0; e < r.logs.size(); ++e) {
            const auto& log = r.logs[e];
            CHECK(log.epoch == e);
            CHECK(std::abs(log.l_d - (log.l_sup + log.l_unsup_real + log.l_unsup_fake)) < 1e-6);
            CHECK(std::abs(log.l_g - (log.l_fm + log.l_fool)) < 1e-6);
            CHECK((log.train_accuracy >= 0.0 && log.train_accuracy <= 1.0));
            CHECK_FALSE(log.validation_accuracy.has_value());
        }
    }
    SUBCASE("validation accuracy is reported when a validation split exists") {
        auto data = blobs.train;
        data.validation_features = blobs.test_features;
        data.validation_labels = blobs.test_labels;
        const auto r = train(data, config);
        CHECK(r.logs.back().validation_accuracy.has_value());
    }
    SUBCASE("learns the blobs") {
        auto c = config;
        c.epochs = 30;
        const auto r = train(blobs.train, c);
        CHECK(accuracy(predict(r.model, blobs.test_features), blobs.test_labels) >= 0.9);
    }
    SUBCASE("non-finite inputs abort with epoch and batch coordinates") {
        auto data = blobs.train;
        data.train_features(0, 0) = std::numeric_limits<float>::quiet_NaN();
        try {
            train(data, config);
            FAIL("expected NumericError");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("epoch 0, batch") != std::string::npos);
        }
    }
    SUBCASE("invalid configurations") {
        auto c = config;
        c.batch_size = 0;
        CHECK_THROWS_AS(train(blobs.train, c), ConfigError);
        c = config;
        c.lr = 0.0;
        CHECK_THROWS_AS(train(blobs.train, c), ConfigError);
        c = config;
        c.dropout = 1.0;
        CHECK_THROWS_AS(train(blobs.train, c), ConfigError);
        auto data = blobs.train;
        data.train_labels[0] = 7;
        CHECK_THROWS_AS(train(data, config), DataError);
    }
}

TEST_CASE("frozen generator with full labels behaves like the supervised baseline") {
    const auto blobs = testing::make_blobs(5, 16, 0.1, 0, 40, 0, 100);
    auto c = small_config();
    c.epochs = 40;
    c.generator_lr = 0.0;
    c.labeled_fraction = 1.0;
    const auto gan = train(blobs.train, c);
    CHECK(gan.model.generator.layers[0].weight == init_gan(16, 5, c).generator.layers[0].weight);
    const auto base = train_supervised_baseline(blobs.train, c);
    const double gan_acc = accuracy(predict(gan.model, blobs.test_features), blobs.test_labels);
    const double base_acc = accuracy(predict_baseline(base.head, blobs.test_features), blobs.test_labels);
    MESSAGE("frozen-G GAN " << gan_acc << " vs baseline " << base_acc);
    CHECK(gan_acc >= base_acc - 0.02);
    CHECK(base_acc >= 0.95);
}

TEST_CASE("supervised baseline") {
    const auto blobs = testing::make_blobs(3, 6, 0.1, 2, 10, 20, 20);
    auto c = small_config();
    c.epochs = 3;
    const auto a = train_supervised_baseline(blobs.train, c);
    const auto b = train_supervised_baseline(blobs.train, c);
    CHECK(a.epoch_losses == b.epoch_losses);
    CHECK(a.epoch_losses.size() == 3);
    const auto p = predict_baseline(a.head, blobs.test_features);
    CHECK(p.cols() == 3);
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("make_training_set binds ids and masks labels") {
    DatasetBundle b;
    b.vocab = LabelVocab({"a", "b"});
    b.utterances = {{0, "one two", 0, Split::train},
                    {1, "three four", 1, Split::train},
                    {2, "five six", 1, Split::validation},
                    {3, "seven eight", 0, Split::test}};
    FeatureMatrix m(4, 2);
    m << 0, 0, 1, 1, 2, 2, 3, 3;
    const FeatureSource src = PrecomputedEmbeddings{m};
    const auto data = make_training_set(src, b, {{1}, {0}});
    CHECK(data.num_classes == 2);
    CHECK(data.train_features.rows() == 2);
    CHECK_FALSE(data.train_labels[0].has_value());
    CHECK(data.train_labels[1] == 1u);
    CHECK(data.validation_features(0, 0) == 2.0f);
    CHECK(data.validation_labels == std::vector<std::size_t>{1});
    const FeatureSource short_src = PrecomputedEmbeddings{FeatureMatrix::Zero(3, 2)};
    CHECK_THROWS_AS(make_training_set(short_src, b, {{1}, {0}}), BindingError);
}
