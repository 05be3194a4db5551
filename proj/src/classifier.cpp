#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "latlab/models.hpp"
#include "latlab/optimizer.hpp"
#include "latlab/rng.hpp"

namespace latlab {

namespace detail {

ClassifierVars classifier_forward(ad::Tape& tape, const ClassifierConfig& arch, const Tensor& x) {
    (void)arch;
    ad::Var xv = tape.constant(x);
    ad::Var h1 = tape.silu(tape.add_rowvec(tape.matmul(xv, tape.param("w1")), tape.param("b1")));
    ad::Var h2 = tape.silu(tape.add_rowvec(tape.matmul(h1, tape.param("w2")), tape.param("b2")));
    ad::Var content = tape.add_rowvec(tape.matmul(h2, tape.param("w_content")), tape.param("b_content"));
    ad::Var attr = tape.add_rowvec(tape.matmul(h2, tape.param("w_attr")), tape.param("b_attr"));
    return ClassifierVars{h1, h2, content, attr};
}

} // namespace detail

static void init_weight_cl(ParamStore& ps, uint64_t seed, int stream, const std::string& name,
                           std::vector<int64_t> shape) {
    Tensor& w = ps.create(name, std::move(shape));
    RngStream rng = make_rng(seed, static_cast<uint64_t>(stream));
    const double std = 1.0 / std::sqrt(static_cast<double>(w.rows()));
    for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.next_normal() * std;
}

ClassifierModel make_classifier(const ClassifierConfig& arch, uint64_t init_seed) {
    ClassifierModel m;
    m.arch = arch;
    m.train_seed = init_seed;
    init_weight_cl(m.params, init_seed, 0, "w1", {kImagePixels, arch.hidden1});
    m.params.create("b1", {arch.hidden1});
    init_weight_cl(m.params, init_seed, 1, "w2", {arch.hidden1, arch.hidden2});
    m.params.create("b2", {arch.hidden2});
    init_weight_cl(m.params, init_seed, 2, "w_content", {arch.hidden2, 4});
    m.params.create("b_content", {4});
    init_weight_cl(m.params, init_seed, 3, "w_attr", {arch.hidden2, kAttributeCount});
    m.params.create("b_attr", {kAttributeCount});
    return m;
}

static Tensor flat_image(const Tensor& image, const char* who) {
    if (image.rank() != 2 || image.rows() != kImageSize || image.cols() != kImageSize) {
        throw std::invalid_argument(std::string(who) + ": expected 32x32 image");
    }
    return image.reshaped({1, kImagePixels});
}

Classification classify(const ClassifierModel& model, const Tensor& image) {
    ad::Tape tape(const_cast<ParamStore*>(&model.params));
    const auto vars = detail::classifier_forward(tape, model.arch, flat_image(image, "classify"));
    const Tensor& content = tape.value(vars.content_logits);
    const Tensor& attr = tape.value(vars.attr_logits);

    Classification out{};
    double m = content[0];
    for (int j = 1; j < 4; ++j) m = std::max(m, content[j]);
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) sum += std::exp(content[j] - m);
    for (int j = 0; j < 4; ++j) out.content_probs[static_cast<size_t>(j)] = std::exp(content[j] - m) / sum;
    for (int j = 0; j < kAttributeCount; ++j)
        out.attr_probs[static_cast<size_t>(j)] = 1.0 / (1.0 + std::exp(-attr[j]));
    return out;
}

std::vector<FeatureVector> features(const ClassifierModel& model, const Tensor& image) {
    ad::Tape tape(const_cast<ParamStore*>(&model.params));
    const auto vars = detail::classifier_forward(tape, model.arch, flat_image(image, "features"));
    std::vector<FeatureVector> out;
    for (ad::Var layer : {vars.h1, vars.h2}) {
        Tensor v = tape.value(layer).reshaped({tape.value(layer).size()});
        const double n = l2_norm(v);
        if (n == 0.0) {
            out.push_back(FeatureVector{std::move(v), true});
        } else {
            out.push_back(FeatureVector{scale(v, 1.0 / n), false});
        }
    }
    return out;
}

static int argmax4(const std::array<double, 4>& p) {
    int best = 0;
    for (int j = 1; j < 4; ++j)
        if (p[static_cast<size_t>(j)] > p[static_cast<size_t>(best)]) best = j;
    return best;
}

std::map<std::string, double> evaluate_classifier(const ClassifierModel& model, const Dataset& ds) {
    if (ds.items.empty()) throw std::invalid_argument("evaluate_classifier: empty dataset");
    // Per-head confusion counts.
    std::array<std::array<int64_t, 3>, kAttributeCount> attr_conf{};   // tp, fp, fn
    std::array<int64_t, kAttributeCount> attr_correct{};
    std::array<std::array<int64_t, 3>, 4> content_conf{};
    int64_t content_correct = 0;
    for (const auto& ph : ds.items) {
        const Classification c = classify(model, ph.image);
        for (int j = 0; j < kAttributeCount; ++j) {
            const bool truth = ph.attrs.present[static_cast<size_t>(j)];
            const bool pred = c.attr_probs[static_cast<size_t>(j)] >= 0.5;
            if (pred == truth) ++attr_correct[static_cast<size_t>(j)];
            if (pred && truth) ++attr_conf[static_cast<size_t>(j)][0];
            if (pred && !truth) ++attr_conf[static_cast<size_t>(j)][1];
            if (!pred && truth) ++attr_conf[static_cast<size_t>(j)][2];
        }
        const int truth_q = content_quadrant(ph.content);
        const int pred_q = argmax4(c.content_probs);
        if (truth_q == pred_q) ++content_correct;
        if (truth_q == pred_q) ++content_conf[static_cast<size_t>(truth_q)][0];
        else {
            ++content_conf[static_cast<size_t>(pred_q)][1];
            ++content_conf[static_cast<size_t>(truth_q)][2];
        }
    }
    const double n = static_cast<double>(ds.items.size());
    const auto f1 = [](const std::array<int64_t, 3>& c) {
        const double denom = static_cast<double>(2 * c[0] + c[1] + c[2]);
        return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(c[0]) / denom;
    };
    std::map<std::string, double> out;
    for (int j = 0; j < kAttributeCount; ++j) {
        const std::string& name = attribute_name(static_cast<Attribute>(j));
        out["accuracy_" + name] = static_cast<double>(attr_correct[static_cast<size_t>(j)]) / n;
        out["f1_" + name] = f1(attr_conf[static_cast<size_t>(j)]);
    }
    out["accuracy_content"] = static_cast<double>(content_correct) / n;
    double macro = 0.0;
    for (const auto& c : content_conf) macro += f1(c);
    out["f1_content"] = macro / 4.0;
    return out;
}

std::pair<ClassifierModel, TrainReport> train_classifier(const Dataset& dataset, const TrainConfig& cfg,
                                                         const ClassifierConfig& arch, const Dataset* heldout) {
    cfg.validate();
    if (dataset.items.empty()) throw std::invalid_argument("train_classifier: empty dataset");
    // Reject degenerate label distributions per head.
    for (Attribute a : all_attributes()) {
        bool any_pos = false, any_neg = false;
        for (const auto& ph : dataset.items) (ph.attrs.has(a) ? any_pos : any_neg) = true;
        if (!any_pos || !any_neg) {
            throw std::invalid_argument("train_classifier: head '" + attribute_name(a) +
                                        "' has a single class in the data");
        }
    }
    {
        const int q0 = content_quadrant(dataset.items.front().content);
        bool varied = false;
        for (const auto& ph : dataset.items) varied |= content_quadrant(ph.content) != q0;
        if (!varied) throw std::invalid_argument("train_classifier: head 'content' has a single class in the data");
    }

    ClassifierModel model = make_classifier(arch, cfg.seed);
    const int64_t n = static_cast<int64_t>(dataset.items.size());
    RngStream batch_rng = make_rng(cfg.seed, 1000);
    AdamOptimizer adam(model.params, cfg.lr, cfg.beta1, cfg.beta2);

    TrainReport report;
    const int64_t iterations = std::max<int64_t>(cfg.steps, 1);
    for (int64_t it = 0; it < iterations; ++it) {
        const int b = cfg.batch;
        Tensor x({b, kImagePixels});
        Tensor attr_targets({b, kAttributeCount});
        std::vector<int> labels(static_cast<size_t>(b));
        for (int r = 0; r < b; ++r) {
            const auto idx = static_cast<size_t>(batch_rng.next_below(static_cast<uint64_t>(n)));
            const Phantom& ph = dataset.items[idx];
            for (int64_t j = 0; j < kImagePixels; ++j) x.at2(r, j) = ph.image[j];
            for (int j = 0; j < kAttributeCount; ++j)
                attr_targets.at2(r, j) = ph.attrs.present[static_cast<size_t>(j)] ? 1.0 : 0.0;
            labels[static_cast<size_t>(r)] = content_quadrant(ph.content);
        }

        ad::Tape tape(&model.params);
        const auto vars = detail::classifier_forward(tape, model.arch, x);
        ad::Var loss = tape.add(tape.softmax_cross_entropy(vars.content_logits, labels),
                                tape.sigmoid_bce(vars.attr_logits, attr_targets));
        const double loss_value = tape.scalar(loss);
        if (!std::isfinite(loss_value)) throw std::runtime_error("train_classifier: non-finite loss");
        report.loss_curve.push_back(loss_value);
        if (cfg.steps == 0) break;

        model.params.zero_grads();
        tape.backward(loss);
        adam.step();
    }

    report.metrics["initial_loss"] = report.loss_curve.front();
    report.metrics["final_loss"] = report.loss_curve.back();
    const Dataset& eval_set = heldout ? *heldout : dataset;
    for (const auto& [k, v] : evaluate_classifier(model, eval_set)) report.metrics[k] = v;
    return {std::move(model), std::move(report)};
}

} // namespace latlab
