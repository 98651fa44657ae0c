#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "typeforge/nn/mat.hpp"

namespace typeforge::nn {

// A named trainable tensor. Gradients accumulate here when a tape runs
// backward. Sharing one Parameter between two modules ties their weights:
// there is a single storage and a single gradient.
struct Parameter {
    std::string name;
    Mat value;
    Mat grad;
    Parameter(std::string n, int r, int c) : name(std::move(n)), value(r, c), grad(r, c) {}
};
using ParamPtr = std::shared_ptr<Parameter>;

// Ordered parameter registry. Registration order is canonical: it fixes
// initialization draws, optimizer state layout, and checkpoint layout.
class ParameterStore {
public:
    ParamPtr create(const std::string& name, int rows, int cols);
    ParamPtr find(const std::string& name) const; // nullptr if absent
    const std::vector<ParamPtr>& all() const { return params_; }
    void zero_grads();
    size_t scalar_count() const;

private:
    std::vector<ParamPtr> params_;
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over Mat-valued nodes. Build one step's computation,
// call backward(loss) once, read gradients off the bound Parameters, then
// clear() and rebuild for the next step.
class Tape {
public:
    Var constant(Mat m);
    Var zero_scalar() { return constant(Mat(1, 1)); }

    // Leaf bound to a parameter. Memoized per tape, so repeated uses of the
    // same parameter share one node and its gradient accumulates there.
    Var param(const ParamPtr& p);
    // Leaf holding a row subset of a parameter; backward scatter-adds into
    // the parameter gradient without materializing the full table.
    Var param_rows(const ParamPtr& p, std::vector<int> ids);

    Var add(Var a, Var b);                 // same shape
    Var add_row_broadcast(Var a, Var row); // a: m x n, row: 1 x n
    Var scale(Var a, double s);
    Var matmul(Var a, Var b);    // a * b
    Var matmul_nt(Var a, Var b); // a * b^T
    Var gelu(Var a);
    Var layer_norm(Var x, Var gain, Var bias, double eps);
    Var rows(Var x, std::vector<int> ids);
    Var slice_cols(Var x, int c0, int c1);
    Var concat_cols(const std::vector<Var>& xs);
    Var concat_rows(const std::vector<Var>& xs);
    // Per-row softmax. `valid`, when given, has the same shape (row-major)
    // and masked-out positions get exactly zero probability and gradient.
    Var softmax_rows(Var scores, const std::vector<uint8_t>* valid = nullptr);

    // Scalar (1 x 1) results.
    // sum_ij w_ij * (softplus(s_ij) - s_ij * y_ij) / denom
    Var bce_with_logits(Var scores, Mat y, Mat w, double denom);
    // mean over rows of (logsumexp(row) - row[target])
    Var cross_entropy_rows(Var logits, std::vector<int> targets);
    Var axpy(Var a, Var b, double sb); // scalars: a + sb * b

    const Mat& value(Var v) const { return nodes_[v.id].value; }
    double scalar(Var v) const;

    void backward(Var loss);
    void clear();
    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void()> back; // empty for leaves and constants
        ParamPtr bound;             // set for full-parameter leaves
    };

    int push_(Mat value);
    Mat& grad_(int id) { return nodes_[id].grad; }
    const Mat& val_(int id) const { return nodes_[id].value; }

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, int> param_nodes_;
};

// Adam with bias correction, applied over the store's registration order.
class Adam {
public:
    Adam(std::vector<ParamPtr> params, double learning_rate,
         double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step();

private:
    std::vector<ParamPtr> params_;
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<Mat> m_, v_;
};

double global_grad_norm(const std::vector<ParamPtr>& params);
void clip_global_grad_norm(const std::vector<ParamPtr>& params, double max_norm);

} // namespace typeforge::nn
