#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>

#include "latlab/errors.hpp"
#include "latlab/io_util.hpp"
#include "latlab/models.hpp"
#include "latlab/rng.hpp"

using namespace latlab;

namespace {

DenoiserConfig tiny_denoiser_arch() {
    DenoiserConfig a;
    a.hidden1 = 16;
    a.hidden2 = 12;
    return a;
}

Dataset tiny_dataset(int64_t n, uint64_t seed) {
    return sample_dataset(n, seed,
                          {{Attribute::Effusion, 0.4},
                           {Attribute::Device, 0.4},
                           {Attribute::Marker, 0.4},
                           {Attribute::Grid, 0.4}});
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("predict_noise: shape contract and determinism") {
    const NoiseSchedule s = make_schedule(10);
    const DenoiserModel m = make_denoiser(tiny_denoiser_arch(), s, 1);
    RngStream rng = make_rng(2, 0);
    const Tensor x = sample_standard_normal(rng, {32, 32});
    const Embedding e{sample_standard_normal(rng, {16})};
    const Tensor p1 = predict_noise(m, x, 3, e);
    const Tensor p2 = predict_noise(m, x, 3, e);
    CHECK(p1.shape() == x.shape());
    CHECK(max_abs_diff(p1, p2) == 0.0);
    CHECK_THROWS_AS(predict_noise(m, sample_standard_normal(rng, {16, 16}), 3, e), std::invalid_argument);
    CHECK_THROWS_AS(predict_noise(m, x, 0, e), std::invalid_argument);
    CHECK_THROWS_AS(predict_noise(m, x, 11, e), std::invalid_argument);
}

TEST_CASE("batched prediction rows match single-sample predictions") {
    const NoiseSchedule s = make_schedule(10);
    const DenoiserModel m = make_denoiser(tiny_denoiser_arch(), s, 3);
    RngStream rng = make_rng(4, 0);
    Tensor batch({3, kImagePixels});
    std::vector<int> steps = {1, 5, 10};
    std::vector<Embedding> embs;
    for (int r = 0; r < 3; ++r) {
        for (int64_t j = 0; j < kImagePixels; ++j) batch.at2(r, j) = rng.next_normal();
        embs.push_back(Embedding{sample_standard_normal(rng, {16})});
    }
    const Tensor out = predict_noise_batch(m, batch, steps, embs);
    for (int r = 0; r < 3; ++r) {
        Tensor row({32, 32});
        for (int64_t j = 0; j < kImagePixels; ++j) row[j] = batch.at2(r, j);
        const Tensor single = predict_noise(m, row, steps[static_cast<size_t>(r)],
                                            embs[static_cast<size_t>(r)]);
        for (int64_t j = 0; j < kImagePixels; ++j) CHECK(out.at2(r, j) == single[j]);
    }
}

TEST_CASE("denoiser training loss gradient passes the finite-difference check") {
    // Check instance with every gradient factor bounded away from zero:
    // attribute-free phantom at t=1 (pixels never cross 0), constant-shift
    // target, embeddings pushed off the origin. Near-zero-gradient
    // coordinates would otherwise drown the central difference in f64
    // rounding noise at eps = 1e-5.
    const NoiseSchedule s = make_schedule(10);
    DenoiserConfig arch;
    arch.hidden1 = 8;
    arch.hidden2 = 6;
    DenoiserModel m = make_denoiser(arch, s, 1);
    const Dataset ds = sample_dataset(2, 3, {});
    RngStream rng = make_rng(101, 0);
    Tensor x({1, kImagePixels});
    const double sa = std::sqrt(s.alpha_bar[1]), sn = std::sqrt(1.0 - s.alpha_bar[1]);
    for (int64_t j = 0; j < kImagePixels; ++j) x.at2(0, j) = sa * ds.items[1].image[j] + sn * rng.next_normal();
    const Tensor target = Tensor::full({1, kImagePixels}, -0.5);
    Tensor embs({1, kEmbeddingDim});
    for (int64_t i = 0; i < embs.size(); ++i) {
        const double u = rng.next_normal();
        embs[i] = (u >= 0 ? 0.3 : -0.3) + u;
    }
    const std::vector<int> steps = {1};
    const auto loss = [&](ad::Tape& t) {
        return t.mean_sq_error(detail::denoiser_predict(t, m.arch, s.T, x, steps, embs), target);
    };
    CHECK(ad::check_gradients(loss, m.params, 1e-5) < 1e-4);
}

TEST_CASE("classifier loss gradient passes the finite-difference check") {
    ClassifierConfig arch;
    arch.hidden1 = 12;
    arch.hidden2 = 8;
    ClassifierModel m = make_classifier(arch, 7);
    RngStream rng = make_rng(8, 0);
    const Tensor x = sample_standard_normal(rng, {3, kImagePixels});
    Tensor targets({3, kAttributeCount}, {1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1, 1});
    const std::vector<int> labels = {0, 3, 1};
    const auto loss = [&](ad::Tape& t) {
        const auto vars = detail::classifier_forward(t, arch, x);
        return t.add(t.softmax_cross_entropy(vars.content_logits, labels),
                     t.sigmoid_bce(vars.attr_logits, targets));
    };
    CHECK(ad::check_gradients(loss, m.params, 1e-5) < 1e-4);
}

TEST_CASE("train_denoiser: loss drops, steps=0 is a no-op, reruns are bit-identical") {
    const NoiseSchedule s = make_schedule(10);
    const EmbeddingTable table = make_table(1);
    const Dataset ds = tiny_dataset(64, 11);
    TrainConfig cfg;
    cfg.steps = 400;
    cfg.batch = 16;
    cfg.lr = 3e-3;
    cfg.seed = 9;

    auto [m1, r1] = train_denoiser(ds, table, s, cfg, tiny_denoiser_arch());
    CHECK(r1.loss_curve.size() == 400);
    CHECK(r1.metrics.at("final_smoothed_loss") < 0.5 * r1.metrics.at("initial_smoothed_loss"));

    auto [m2, r2] = train_denoiser(ds, table, s, cfg, tiny_denoiser_arch());
    for (const auto& name : m1.params.names()) {
        CHECK(max_abs_diff(m1.params.value(name), m2.params.value(name)) == 0.0);
    }

    TrainConfig zero = cfg;
    zero.steps = 0;
    auto [m0, r0] = train_denoiser(ds, table, s, zero, tiny_denoiser_arch());
    CHECK(r0.loss_curve.size() == 1);
    const DenoiserModel init = make_denoiser(tiny_denoiser_arch(), s, cfg.seed);
    for (const auto& name : m0.params.names()) {
        CHECK(max_abs_diff(m0.params.value(name), init.params.value(name)) == 0.0);
    }

    CHECK_THROWS_AS(train_denoiser(Dataset{}, table, s, cfg, tiny_denoiser_arch()), std::invalid_argument);
}

TEST_CASE("classifier invariants hold for arbitrary parameters") {
    ClassifierConfig arch;
    arch.hidden1 = 10;
    arch.hidden2 = 6;
    const ClassifierModel m = make_classifier(arch, 3);
    RngStream rng = make_rng(12, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor img = sample_standard_normal(rng, {32, 32});
        const Classification c = classify(m, img);
        double sum = 0.0;
        for (double p : c.content_probs) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        for (double p : c.attr_probs) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
    CHECK_THROWS_AS(classify(m, Tensor::zeros({8, 8})), std::invalid_argument);
}

TEST_CASE("features are unit-normalized and deterministic") {
    ClassifierConfig arch;
    arch.hidden1 = 10;
    arch.hidden2 = 6;
    const ClassifierModel m = make_classifier(arch, 4);
    RngStream rng = make_rng(13, 0);
    const Tensor img = sample_standard_normal(rng, {32, 32});
    const auto f1 = features(m, img);
    const auto f2 = features(m, img);
    REQUIRE(f1.size() == 2);
    for (size_t layer = 0; layer < 2; ++layer) {
        if (!f1[layer].zero) CHECK(std::abs(l2_norm(f1[layer].v) - 1.0) <= 1e-9);
        CHECK(max_abs_diff(f1[layer].v, f2[layer].v) == 0.0);
    }
}

TEST_CASE("train_classifier: single-class heads are rejected by name") {
    TrainConfig cfg;
    cfg.steps = 1;
    cfg.batch = 4;
    const Dataset no_grid = sample_dataset(20, 3, {{Attribute::Device, 0.5}});
    try {
        train_classifier(no_grid, cfg);
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("effusion") != std::string::npos);
    }
}

TEST_CASE("train_classifier: metrics reported per head, reruns identical") {
    const Dataset train = tiny_dataset(256, 21);
    const Dataset val = sample_dataset(64, 21,
                                       {{Attribute::Effusion, 0.4},
                                        {Attribute::Device, 0.4},
                                        {Attribute::Marker, 0.4},
                                        {Attribute::Grid, 0.4}},
                                       "val");
    TrainConfig cfg;
    cfg.steps = 200;
    cfg.batch = 16;
    cfg.seed = 5;
    ClassifierConfig arch;
    arch.hidden1 = 32;
    arch.hidden2 = 16;
    auto [m1, r1] = train_classifier(train, cfg, arch, &val);
    auto [m2, r2] = train_classifier(train, cfg, arch, &val);
    for (const char* head : {"effusion", "device", "marker", "grid", "content"}) {
        CHECK(r1.metrics.count("accuracy_" + std::string(head)) == 1);
        CHECK(r1.metrics.count("f1_" + std::string(head)) == 1);
    }
    CHECK(r1.metrics == r2.metrics);
    CHECK(r1.metrics.at("final_loss") < r1.metrics.at("initial_loss"));
}

TEST_CASE("checkpoint round trip reproduces predictions at f32 exactness") {
    namespace fs = std::filesystem;
    const NoiseSchedule s = make_schedule(10);
    DenoiserModel m = make_denoiser(tiny_denoiser_arch(), s, 31);
    const std::string path = (fs::temp_directory_path() / "latlab_dn.mdl1").string();
    save_denoiser(m, path);
    const DenoiserModel loaded = load_denoiser(path);
    CHECK(loaded.arch.hidden1 == m.arch.hidden1);
    CHECK(loaded.schedule.T == 10);

    // Truncate the original to f32 in memory: the loaded model must match it
    // and predict identically.
    DenoiserModel trunc = make_denoiser(tiny_denoiser_arch(), s, 31);
    for (const auto& name : trunc.params.names()) {
        Tensor& t = trunc.params.value(name);
        for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(static_cast<float>(t[i]));
        CHECK(max_abs_diff(t, loaded.params.value(name)) == 0.0);
    }
    RngStream rng = make_rng(32, 0);
    const Tensor x = sample_standard_normal(rng, {32, 32});
    const Embedding e{sample_standard_normal(rng, {16})};
    CHECK(max_abs_diff(predict_noise(loaded, x, 3, e), predict_noise(trunc, x, 3, e)) == 0.0);

    // Save -> load -> save is byte-stable.
    const std::string path2 = (fs::temp_directory_path() / "latlab_dn2.mdl1").string();
    save_denoiser(loaded, path2);
    CHECK(file_hash(path) == file_hash(path2));
    fs::remove(path);
    fs::remove(path2);
}

TEST_CASE("checkpoint validation errors name the problem") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "latlab_bad.mdl1").string();
    write_file_bytes(path, "NOPE", 4);
    CHECK_THROWS_WITH_AS(load_denoiser(path), doctest::Contains("bad magic"), ValidationError);

    ClassifierModel c = make_classifier({.hidden1 = 4, .hidden2 = 3}, 1);
    save_classifier(c, path);
    CHECK_THROWS_WITH_AS(load_denoiser(path), doctest::Contains("kind"), ValidationError);
    CHECK_NOTHROW(load_classifier(path));
    fs::remove(path);
}

} // TEST_SUITE
