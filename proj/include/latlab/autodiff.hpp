#pragma once

#include <functional>
#include <string>
#include <vector>

#include "latlab/param_store.hpp"
#include "latlab/tensor.hpp"

namespace latlab::ad {

struct Var {
    int id = -1;
};

/// Reverse-mode tape covering exactly the op set the models need. A tape is
/// built per forward pass; backward() runs the standard reverse sweep and
/// accumulates leaf gradients into the bound ParamStore.
class Tape {
public:
    explicit Tape(ParamStore* params = nullptr);

    Var constant(Tensor value);
    Var param(const std::string& name);

    Var add(Var a, Var b);
    Var add_rowvec(Var m, Var row);
    Var mul(Var a, Var b);
    /// m[i,j] * col[i,0]: per-row scalar gate.
    Var mul_colvec(Var m, Var col);
    Var silu(Var a);
    Var concat_cols(Var a, Var b);
    Var matmul(Var a, Var b);
    /// h * (1 + s) + t, the per-unit scale-and-shift conditioning.
    Var film(Var h, Var s, Var t);

    // Scalar losses.
    Var mean_sq_error(Var pred, const Tensor& target);
    Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);
    /// Numerically stable BCE on logits; sum over columns, mean over rows.
    Var sigmoid_bce(Var logits, const Tensor& targets);

    const Tensor& value(Var v) const;
    double scalar(Var v) const;
    const Tensor& grad(Var v) const;
    void backward(Var loss);

private:
    enum class Op {
        Leaf,
        Param,
        Add,
        AddRow,
        Mul,
        MulCol,
        Silu,
        Concat,
        MatMul,
        Film,
        Mse,
        SoftmaxCE,
        SigmoidBCE,
    };
    struct Node {
        Op op;
        Tensor value;
        Tensor grad;
        int a = -1, b = -1, c = -1;
        Tensor aux;
        std::vector<int> labels;
        std::string pname;
    };

    Var push(Node n);
    Node& node(Var v);
    const Node& node(Var v) const;

    std::vector<Node> nodes_;
    ParamStore* params_ = nullptr;
};

using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients against central finite differences for
/// every parameter element and returns the maximum relative error
/// max(|g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-12)). The finite-difference
/// side re-evaluates the loss through fresh forward passes only.
double check_gradients(const LossBuilder& build_loss, ParamStore& store, double epsilon);

} // namespace latlab::ad
