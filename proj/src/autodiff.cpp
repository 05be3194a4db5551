#include "latlab/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace latlab::ad {

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tape::Tape(ParamStore* params) : params_(params) {}

Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Var v) {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) throw std::invalid_argument("invalid Var");
    return nodes_[static_cast<size_t>(v.id)];
}
const Tape::Node& Tape::node(Var v) const { return const_cast<Tape*>(this)->node(v); }

Var Tape::constant(Tensor value) {
    Node n{Op::Leaf, std::move(value), {}, -1, -1, -1, {}, {}, {}};
    return push(std::move(n));
}

Var Tape::param(const std::string& name) {
    if (!params_) throw std::runtime_error("tape has no parameter store");
    Node n{Op::Param, params_->value(name), {}, -1, -1, -1, {}, {}, name};
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    Node n{Op::Add, latlab::add(node(a).value, node(b).value), {}, a.id, b.id, -1, {}, {}, {}};
    return push(std::move(n));
}

Var Tape::add_rowvec(Var m, Var row) {
    const Tensor& mv = node(m).value;
    const Tensor& rv = node(row).value;
    if (mv.rank() != 2 || rv.size() != mv.cols()) {
        throw std::invalid_argument("add_rowvec: need [n,k] + [k]");
    }
    Tensor out(mv.shape());
    for (int64_t i = 0; i < mv.rows(); ++i)
        for (int64_t j = 0; j < mv.cols(); ++j) out.at2(i, j) = mv.at2(i, j) + rv[j];
    Node n{Op::AddRow, std::move(out), {}, m.id, row.id, -1, {}, {}, {}};
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    Node n{Op::Mul, latlab::mul(node(a).value, node(b).value), {}, a.id, b.id, -1, {}, {}, {}};
    return push(std::move(n));
}

Var Tape::mul_colvec(Var m, Var col) {
    const Tensor& mv = node(m).value;
    const Tensor& cv = node(col).value;
    if (mv.rank() != 2 || cv.rank() != 2 || cv.cols() != 1 || cv.rows() != mv.rows()) {
        throw std::invalid_argument("mul_colvec: need [n,k] * [n,1]");
    }
    Tensor out(mv.shape());
    for (int64_t i = 0; i < mv.rows(); ++i)
        for (int64_t j = 0; j < mv.cols(); ++j) out.at2(i, j) = mv.at2(i, j) * cv.at2(i, 0);
    Node n{Op::MulCol, std::move(out), {}, m.id, col.id, -1, {}, {}, {}};
    return push(std::move(n));
}

Var Tape::silu(Var a) {
    const Tensor& x = node(a).value;
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out[i] = x[i] * sigmoid(x[i]);
    Node n{Op::Silu, std::move(out), {}, a.id, -1, -1, {}, {}, {}};
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
    const Tensor& av = node(a).value;
    const Tensor& bv = node(b).value;
    if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows()) {
        throw std::invalid_argument("concat_cols: row counts must match");
    }
    Tensor out({av.rows(), av.cols() + bv.cols()});
    for (int64_t i = 0; i < av.rows(); ++i) {
        for (int64_t j = 0; j < av.cols(); ++j) out.at2(i, j) = av.at2(i, j);
        for (int64_t j = 0; j < bv.cols(); ++j) out.at2(i, av.cols() + j) = bv.at2(i, j);
    }
    Node n{Op::Concat, std::move(out), {}, a.id, b.id, -1, {}, {}, {}};
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    Node n{Op::MatMul, latlab::matmul(node(a).value, node(b).value), {}, a.id, b.id, -1, {}, {}, {}};
    return push(std::move(n));
}

Var Tape::film(Var h, Var s, Var t) {
    const Tensor& hv = node(h).value;
    const Tensor& sv = node(s).value;
    const Tensor& tv = node(t).value;
    if (!hv.same_shape(sv) || !hv.same_shape(tv)) throw std::invalid_argument("film: shape mismatch");
    Tensor out(hv.shape());
    for (int64_t i = 0; i < hv.size(); ++i) out[i] = hv[i] * (1.0 + sv[i]) + tv[i];
    Node n{Op::Film, std::move(out), {}, h.id, s.id, t.id, {}, {}, {}};
    return push(std::move(n));
}

Var Tape::mean_sq_error(Var pred, const Tensor& target) {
    const Tensor& p = node(pred).value;
    if (!p.same_shape(target)) throw std::invalid_argument("mean_sq_error: shape mismatch");
    double s = 0.0;
    for (int64_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - target[i];
        s += d * d;
    }
    Node n{Op::Mse, Tensor({1}, {s / static_cast<double>(p.size())}), {}, pred.id, -1, -1, target, {}, {}};
    return push(std::move(n));
}

Var Tape::softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
    const Tensor& z = node(logits).value;
    if (z.rank() != 2 || static_cast<int64_t>(labels.size()) != z.rows()) {
        throw std::invalid_argument("softmax_cross_entropy: need [n,c] logits and n labels");
    }
    Tensor probs(z.shape());
    double loss = 0.0;
    for (int64_t i = 0; i < z.rows(); ++i) {
        double m = z.at2(i, 0);
        for (int64_t j = 1; j < z.cols(); ++j) m = std::max(m, z.at2(i, j));
        double sum = 0.0;
        for (int64_t j = 0; j < z.cols(); ++j) sum += std::exp(z.at2(i, j) - m);
        const double log_sum = std::log(sum) + m;
        for (int64_t j = 0; j < z.cols(); ++j) probs.at2(i, j) = std::exp(z.at2(i, j) - log_sum);
        const int y = labels[static_cast<size_t>(i)];
        if (y < 0 || y >= z.cols()) throw std::invalid_argument("softmax_cross_entropy: label out of range");
        loss += log_sum - z.at2(i, y);
    }
    Node n{Op::SoftmaxCE, Tensor({1}, {loss / static_cast<double>(z.rows())}),
           {}, logits.id, -1, -1, std::move(probs), labels, {}};
    return push(std::move(n));
}

Var Tape::sigmoid_bce(Var logits, const Tensor& targets) {
    const Tensor& z = node(logits).value;
    if (!z.same_shape(targets) || z.rank() != 2) throw std::invalid_argument("sigmoid_bce: shape mismatch");
    double loss = 0.0;
    for (int64_t i = 0; i < z.size(); ++i) {
        const double zi = z[i], yi = targets[i];
        loss += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
    }
    Node n{Op::SigmoidBCE, Tensor({1}, {loss / static_cast<double>(z.rows())}),
           {}, logits.id, -1, -1, targets, {}, {}};
    return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar(Var v) const {
    const Tensor& t = node(v).value;
    if (t.size() != 1) throw std::invalid_argument("scalar: tensor has more than one element");
    return t[0];
}

const Tensor& Tape::grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.size() == 0) throw std::runtime_error("grad requested before backward");
    return n.grad;
}

void Tape::backward(Var loss) {
    Node& top = node(loss);
    if (top.value.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    for (auto& n : nodes_) n.grad = Tensor::zeros(n.value.shape());
    top.grad[0] = 1.0;

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        const Tensor& g = n.grad;
        switch (n.op) {
        case Op::Leaf:
        case Op::Param:
            break;
        case Op::Add: {
            Tensor& da = nodes_[n.a].grad;
            Tensor& db = nodes_[n.b].grad;
            for (int64_t i = 0; i < g.size(); ++i) {
                da[i] += g[i];
                db[i] += g[i];
            }
            break;
        }
        case Op::AddRow: {
            Tensor& dm = nodes_[n.a].grad;
            Tensor& dr = nodes_[n.b].grad;
            const int64_t rows = n.value.rows(), cols = n.value.cols();
            for (int64_t i = 0; i < rows; ++i)
                for (int64_t j = 0; j < cols; ++j) {
                    dm.at2(i, j) += g.at2(i, j);
                    dr[j] += g.at2(i, j);
                }
            break;
        }
        case Op::Mul: {
            Tensor& da = nodes_[n.a].grad;
            Tensor& db = nodes_[n.b].grad;
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            for (int64_t i = 0; i < g.size(); ++i) {
                da[i] += g[i] * bv[i];
                db[i] += g[i] * av[i];
            }
            break;
        }
        case Op::MulCol: {
            Tensor& dm = nodes_[n.a].grad;
            Tensor& dc = nodes_[n.b].grad;
            const Tensor& mv = nodes_[n.a].value;
            const Tensor& cv = nodes_[n.b].value;
            for (int64_t i = 0; i < mv.rows(); ++i) {
                for (int64_t j = 0; j < mv.cols(); ++j) {
                    dm.at2(i, j) += g.at2(i, j) * cv.at2(i, 0);
                    dc.at2(i, 0) += g.at2(i, j) * mv.at2(i, j);
                }
            }
            break;
        }
        case Op::Silu: {
            Tensor& da = nodes_[n.a].grad;
            const Tensor& x = nodes_[n.a].value;
            for (int64_t i = 0; i < g.size(); ++i) {
                const double s = sigmoid(x[i]);
                da[i] += g[i] * s * (1.0 + x[i] * (1.0 - s));
            }
            break;
        }
        case Op::Concat: {
            Tensor& da = nodes_[n.a].grad;
            Tensor& db = nodes_[n.b].grad;
            const int64_t rows = n.value.rows(), ac = da.cols();
            for (int64_t i = 0; i < rows; ++i) {
                for (int64_t j = 0; j < ac; ++j) da.at2(i, j) += g.at2(i, j);
                for (int64_t j = 0; j < db.cols(); ++j) db.at2(i, j) += g.at2(i, ac + j);
            }
            break;
        }
        case Op::MatMul: {
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            Tensor da = latlab::matmul(g, bv, false, true);
            Tensor db = latlab::matmul(av, g, true, false);
            Tensor& ga = nodes_[n.a].grad;
            Tensor& gb = nodes_[n.b].grad;
            for (int64_t i = 0; i < ga.size(); ++i) ga[i] += da[i];
            for (int64_t i = 0; i < gb.size(); ++i) gb[i] += db[i];
            break;
        }
        case Op::Film: {
            Tensor& dh = nodes_[n.a].grad;
            Tensor& ds = nodes_[n.b].grad;
            Tensor& dt = nodes_[n.c].grad;
            const Tensor& hv = nodes_[n.a].value;
            const Tensor& sv = nodes_[n.b].value;
            for (int64_t i = 0; i < g.size(); ++i) {
                dh[i] += g[i] * (1.0 + sv[i]);
                ds[i] += g[i] * hv[i];
                dt[i] += g[i];
            }
            break;
        }
        case Op::Mse: {
            Tensor& dp = nodes_[n.a].grad;
            const Tensor& pv = nodes_[n.a].value;
            const double c = 2.0 * g[0] / static_cast<double>(pv.size());
            for (int64_t i = 0; i < pv.size(); ++i) dp[i] += c * (pv[i] - n.aux[i]);
            break;
        }
        case Op::SoftmaxCE: {
            Tensor& dz = nodes_[n.a].grad;
            const Tensor& probs = n.aux;
            const double c = g[0] / static_cast<double>(probs.rows());
            for (int64_t i = 0; i < probs.rows(); ++i) {
                for (int64_t j = 0; j < probs.cols(); ++j) {
                    const double onehot = (j == n.labels[static_cast<size_t>(i)]) ? 1.0 : 0.0;
                    dz.at2(i, j) += c * (probs.at2(i, j) - onehot);
                }
            }
            break;
        }
        case Op::SigmoidBCE: {
            Tensor& dz = nodes_[n.a].grad;
            const Tensor& zv = nodes_[n.a].value;
            const double c = g[0] / static_cast<double>(zv.rows());
            for (int64_t i = 0; i < zv.size(); ++i) dz[i] += c * (sigmoid(zv[i]) - n.aux[i]);
            break;
        }
        }
    }

    if (params_) {
        for (auto& n : nodes_) {
            if (n.op == Op::Param) {
                Tensor& g = params_->grad(n.pname);
                for (int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
            }
        }
    }
}

double check_gradients(const LossBuilder& build_loss, ParamStore& store, double epsilon) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
        throw std::invalid_argument("check_gradients: epsilon outside [1e-7, 1e-3]");
    }
    const auto eval = [&]() {
        Tape t(&store);
        const double v = t.scalar(build_loss(t));
        if (!std::isfinite(v)) throw std::runtime_error("check_gradients: non-finite loss");
        return v;
    };

    store.zero_grads();
    {
        Tape t(&store);
        Var loss = build_loss(t);
        if (!std::isfinite(t.scalar(loss))) throw std::runtime_error("check_gradients: non-finite loss");
        t.backward(loss);
    }

    double max_rel = 0.0;
    for (const auto& name : store.names()) {
        const Tensor ad_grad = store.grad(name);
        Tensor& v = store.value(name);
        for (int64_t i = 0; i < v.size(); ++i) {
            const double saved = v[i];
            v[i] = saved + epsilon;
            const double lp = eval();
            v[i] = saved - epsilon;
            const double lm = eval();
            v[i] = saved;
            const double fd = (lp - lm) / (2.0 * epsilon);
            const double ad = ad_grad[i];
            const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-12});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace latlab::ad
