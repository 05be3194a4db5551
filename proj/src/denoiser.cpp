#include <cmath>
#include <stdexcept>

#include "latlab/models.hpp"
#include "latlab/optimizer.hpp"
#include "latlab/rng.hpp"

namespace latlab {

void TrainConfig::validate() const {
    if (steps < 0) throw std::invalid_argument("TrainConfig.steps must be >= 0");
    if (batch < 1) throw std::invalid_argument("TrainConfig.batch must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig.lr must be > 0");
}

namespace detail {

Tensor time_features(const std::vector<int>& steps, int T, int dim) {
    const int half = dim / 2;
    Tensor out({static_cast<int64_t>(steps.size()), dim});
    for (size_t i = 0; i < steps.size(); ++i) {
        const double tn = static_cast<double>(steps[i]) / static_cast<double>(T);
        for (int k = 0; k < half; ++k) {
            const double omega = std::exp(std::log(1000.0) * k / (half - 1));
            out.at2(static_cast<int64_t>(i), 2 * k) = std::sin(tn * omega);
            out.at2(static_cast<int64_t>(i), 2 * k + 1) = std::cos(tn * omega);
        }
    }
    return out;
}

ad::Var denoiser_predict(ad::Tape& tape, const DenoiserConfig& arch, int T, const Tensor& x,
                         const std::vector<int>& steps, const Tensor& embs) {
    ad::Var xv = tape.constant(x);
    ad::Var tf = tape.constant(time_features(steps, T, arch.time_dim));
    ad::Var ev = tape.constant(embs);

    ad::Var ep = tape.silu(tape.add_rowvec(tape.matmul(ev, tape.param("w_emb")), tape.param("b_emb")));
    ad::Var cond = tape.concat_cols(tf, ep);
    ad::Var s = tape.add_rowvec(tape.matmul(cond, tape.param("w_scale")), tape.param("b_scale"));
    ad::Var sh = tape.add_rowvec(tape.matmul(cond, tape.param("w_shift")), tape.param("b_shift"));

    ad::Var h1_pre = tape.add_rowvec(tape.matmul(xv, tape.param("w1")), tape.param("b1"));
    ad::Var h1 = tape.silu(tape.film(h1_pre, s, sh));
    ad::Var h2 = tape.silu(tape.add_rowvec(tape.matmul(h1, tape.param("w2")), tape.param("b2")));
    ad::Var out = tape.add_rowvec(tape.matmul(h2, tape.param("w3")), tape.param("b3"));

    // Time-gated skip from the input: the noise target carries a full-rank
    // x_t-proportional component that the hidden bottleneck cannot represent,
    // and without it the reverse pass never removes isotropic noise.
    ad::Var gate = tape.add_rowvec(tape.matmul(tf, tape.param("w_gate")), tape.param("b_gate"));
    return tape.add(out, tape.mul_colvec(xv, gate));
}

} // namespace detail

static void init_weight(ParamStore& ps, RngStream base, int stream, const std::string& name,
                        std::vector<int64_t> shape, double std_scale) {
    Tensor& w = ps.create(name, std::move(shape));
    RngStream rng = make_rng(base.seed(), base.stream_id() + static_cast<uint64_t>(stream));
    const double std = std_scale / std::sqrt(static_cast<double>(w.rank() == 2 ? w.rows() : w.size()));
    for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.next_normal() * std;
}

DenoiserModel make_denoiser(const DenoiserConfig& arch, const NoiseSchedule& schedule, uint64_t init_seed) {
    DenoiserModel m;
    m.arch = arch;
    m.schedule = schedule;
    m.train_seed = init_seed;
    const int cond_dim = arch.time_dim + arch.emb_proj;
    RngStream base = make_rng(init_seed, 0);
    init_weight(m.params, base, 0, "w1", {kImagePixels, arch.hidden1}, 1.0);
    m.params.create("b1", {arch.hidden1});
    init_weight(m.params, base, 1, "w2", {arch.hidden1, arch.hidden2}, 1.0);
    m.params.create("b2", {arch.hidden2});
    init_weight(m.params, base, 2, "w3", {arch.hidden2, kImagePixels}, 1.0);
    m.params.create("b3", {kImagePixels});
    init_weight(m.params, base, 3, "w_emb", {kEmbeddingDim, arch.emb_proj}, 1.0);
    m.params.create("b_emb", {arch.emb_proj});
    // Conditioning starts near the identity: small scale/shift weights.
    init_weight(m.params, base, 4, "w_scale", {cond_dim, arch.hidden1}, 0.1);
    m.params.create("b_scale", {arch.hidden1});
    init_weight(m.params, base, 5, "w_shift", {cond_dim, arch.hidden1}, 0.1);
    m.params.create("b_shift", {arch.hidden1});
    m.params.create("w_gate", {arch.time_dim, 1});
    m.params.create("b_gate", {1});
    return m;
}

Tensor predict_noise_batch(const DenoiserModel& model, const Tensor& x, const std::vector<int>& steps,
                           const std::vector<Embedding>& embs) {
    if (x.rank() != 2 || x.cols() != kImagePixels) {
        throw std::invalid_argument("predict_noise_batch: expected [n, " + std::to_string(kImagePixels) + "]");
    }
    if (static_cast<int64_t>(steps.size()) != x.rows() || embs.size() != steps.size()) {
        throw std::invalid_argument("predict_noise_batch: rows, steps and embeddings must align");
    }
    for (int t : steps) {
        if (t < 1 || t > model.schedule.T)
            throw std::invalid_argument("predict_noise_batch: step " + std::to_string(t) + " outside [1, " +
                                        std::to_string(model.schedule.T) + "]");
    }
    Tensor emb_mat({x.rows(), kEmbeddingDim});
    for (int64_t i = 0; i < x.rows(); ++i) {
        const Tensor& v = embs[static_cast<size_t>(i)].vector;
        if (v.size() != kEmbeddingDim) throw std::invalid_argument("predict_noise_batch: bad embedding dim");
        for (int j = 0; j < kEmbeddingDim; ++j) emb_mat.at2(i, j) = v[j];
    }
    ad::Tape tape(const_cast<ParamStore*>(&model.params));
    ad::Var out = detail::denoiser_predict(tape, model.arch, model.schedule.T, x, steps, emb_mat);
    Tensor pred = tape.value(out);
    require_finite(pred, "predict_noise");
    return pred;
}

Tensor predict_noise(const DenoiserModel& model, const Tensor& x_t, int t, const Embedding& e) {
    if (x_t.rank() != 2 || x_t.rows() != kImageSize || x_t.cols() != kImageSize) {
        throw std::invalid_argument("predict_noise: expected 32x32 image");
    }
    const Tensor flat = x_t.reshaped({1, kImagePixels});
    Tensor pred = predict_noise_batch(model, flat, {t}, {e});
    return pred.reshaped({kImageSize, kImageSize});
}

std::pair<DenoiserModel, TrainReport> train_denoiser(const Dataset& dataset, const EmbeddingTable& table,
                                                     const NoiseSchedule& schedule, const TrainConfig& cfg,
                                                     const DenoiserConfig& arch) {
    cfg.validate();
    if (dataset.items.empty()) throw std::invalid_argument("train_denoiser: empty dataset");

    DenoiserModel model = make_denoiser(arch, schedule, cfg.seed);
    const int64_t n = static_cast<int64_t>(dataset.items.size());

    // Flattened images and per-item embeddings, fixed for the whole run.
    std::vector<const Tensor*> images;
    std::vector<Tensor> item_embs;
    images.reserve(static_cast<size_t>(n));
    item_embs.reserve(static_cast<size_t>(n));
    for (const auto& ph : dataset.items) {
        images.push_back(&ph.image);
        AttributeSpec spec;
        for (Attribute a : all_attributes())
            if (ph.attrs.has(a)) spec.add(a);
        item_embs.push_back(embed(spec, table).vector);
    }

    RngStream batch_rng = make_rng(cfg.seed, 1000);
    RngStream step_rng = make_rng(cfg.seed, 1001);
    RngStream noise_rng = make_rng(cfg.seed, 1002);
    AdamOptimizer adam(model.params, cfg.lr, cfg.beta1, cfg.beta2);

    TrainReport report;
    const int64_t iterations = std::max<int64_t>(cfg.steps, 1);
    for (int64_t it = 0; it < iterations; ++it) {
        const int b = cfg.batch;
        Tensor x_t({b, kImagePixels});
        Tensor eps({b, kImagePixels});
        Tensor embs({b, kEmbeddingDim});
        std::vector<int> steps(static_cast<size_t>(b));
        for (int r = 0; r < b; ++r) {
            const auto idx = static_cast<size_t>(batch_rng.next_below(static_cast<uint64_t>(n)));
            const int t = 1 + static_cast<int>(step_rng.next_below(static_cast<uint64_t>(schedule.T)));
            steps[static_cast<size_t>(r)] = t;
            const double sa = std::sqrt(schedule.alpha_bar[static_cast<size_t>(t)]);
            const double sn = std::sqrt(1.0 - schedule.alpha_bar[static_cast<size_t>(t)]);
            const Tensor& img = *images[idx];
            for (int64_t j = 0; j < kImagePixels; ++j) {
                const double e = noise_rng.next_normal();
                eps.at2(r, j) = e;
                x_t.at2(r, j) = sa * img[j] + sn * e;
            }
            const Tensor& ev = item_embs[idx];
            for (int j = 0; j < kEmbeddingDim; ++j) embs.at2(r, j) = ev[j];
        }

        ad::Tape tape(&model.params);
        ad::Var pred = detail::denoiser_predict(tape, model.arch, schedule.T, x_t, steps, embs);
        ad::Var loss = tape.mean_sq_error(pred, eps);
        const double loss_value = tape.scalar(loss);
        if (!std::isfinite(loss_value)) throw std::runtime_error("train_denoiser: non-finite loss");
        report.loss_curve.push_back(loss_value);
        if (cfg.steps == 0) break;   // report the initial loss, touch nothing

        model.params.zero_grads();
        tape.backward(loss);
        adam.step();
    }

    const auto window_mean = [&](size_t begin, size_t count) {
        count = std::min(count, report.loss_curve.size() - begin);
        double s = 0.0;
        for (size_t i = begin; i < begin + count; ++i) s += report.loss_curve[i];
        return s / static_cast<double>(count);
    };
    const size_t w = std::min<size_t>(50, report.loss_curve.size());
    report.metrics["initial_loss"] = report.loss_curve.front();
    report.metrics["final_loss"] = report.loss_curve.back();
    report.metrics["initial_smoothed_loss"] = window_mean(0, w);
    report.metrics["final_smoothed_loss"] = window_mean(report.loss_curve.size() - w, w);
    return {std::move(model), std::move(report)};
}

} // namespace latlab
