#include "typeforge/nn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace typeforge::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

double softplus(double x) {
    // log(1 + e^x), stable for large |x|
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

ParamPtr ParameterStore::create(const std::string& name, int rows, int cols) {
    if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    params_.push_back(std::make_shared<Parameter>(name, rows, cols));
    return params_.back();
}

ParamPtr ParameterStore::find(const std::string& name) const {
    for (const auto& p : params_) {
        if (p->name == name) return p;
    }
    return nullptr;
}

void ParameterStore::zero_grads() {
    for (const auto& p : params_) p->grad.zero();
}

size_t ParameterStore::scalar_count() const {
    size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

int Tape::push_(Mat value) {
    nodes_.push_back(Node{std::move(value), Mat{}, nullptr, nullptr});
    return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::constant(Mat m) { return Var{push_(std::move(m))}; }

Var Tape::param(const ParamPtr& p) {
    auto it = param_nodes_.find(p.get());
    if (it != param_nodes_.end()) return Var{it->second};
    const int id = push_(p->value);
    nodes_[id].bound = p;
    param_nodes_[p.get()] = id;
    return Var{id};
}

Var Tape::param_rows(const ParamPtr& p, std::vector<int> ids) {
    Mat out(static_cast<int>(ids.size()), p->value.cols);
    for (size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || ids[r] >= p->value.rows) {
            throw std::invalid_argument("param_rows: index out of range for " + p->name);
        }
        std::copy(p->value.row_ptr(ids[r]), p->value.row_ptr(ids[r]) + p->value.cols,
                  out.row_ptr(static_cast<int>(r)));
    }
    const int id = push_(std::move(out));
    ParamPtr pp = p;
    auto idx = std::make_shared<std::vector<int>>(std::move(ids));
    nodes_[id].back = [this, id, pp, idx]() {
        const Mat& g = grad_(id);
        for (size_t r = 0; r < idx->size(); ++r) {
            double* dst = pp->grad.row_ptr((*idx)[r]);
            const double* src = g.row_ptr(static_cast<int>(r));
            for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
        }
    };
    return Var{id};
}

Var Tape::add(Var a, Var b) {
    const Mat& A = val_(a.id);
    const Mat& B = val_(b.id);
    if (!A.same_shape(B)) throw std::invalid_argument("add: shape mismatch");
    Mat out = A;
    for (size_t i = 0; i < out.size(); ++i) out.a[i] += B.a[i];
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, a, b]() {
        const Mat& g = grad_(id);
        Mat& ga = grad_(a.id);
        Mat& gb = grad_(b.id);
        for (size_t i = 0; i < g.size(); ++i) {
            ga.a[i] += g.a[i];
            gb.a[i] += g.a[i];
        }
    };
    return Var{id};
}

Var Tape::add_row_broadcast(Var a, Var row) {
    const Mat& A = val_(a.id);
    const Mat& R = val_(row.id);
    if (R.rows != 1 || R.cols != A.cols) throw std::invalid_argument("add_row_broadcast: shape mismatch");
    Mat out = A;
    for (int r = 0; r < out.rows; ++r) {
        double* orow = out.row_ptr(r);
        for (int c = 0; c < out.cols; ++c) orow[c] += R.a[c];
    }
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, a, row]() {
        const Mat& g = grad_(id);
        Mat& ga = grad_(a.id);
        Mat& gr = grad_(row.id);
        for (size_t i = 0; i < g.size(); ++i) ga.a[i] += g.a[i];
        for (int r = 0; r < g.rows; ++r) {
            const double* grow = g.row_ptr(r);
            for (int c = 0; c < g.cols; ++c) gr.a[c] += grow[c];
        }
    };
    return Var{id};
}

Var Tape::scale(Var a, double s) {
    Mat out = val_(a.id);
    for (double& v : out.a) v *= s;
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, a, s]() {
        const Mat& g = grad_(id);
        Mat& ga = grad_(a.id);
        for (size_t i = 0; i < g.size(); ++i) ga.a[i] += s * g.a[i];
    };
    return Var{id};
}

Var Tape::matmul(Var a, Var b) {
    Mat out;
    mm_nn(val_(a.id), val_(b.id), out, false);
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, a, b]() {
        const Mat& g = grad_(id);
        mm_nt(g, val_(b.id), grad_(a.id), true);
        mm_tn(val_(a.id), g, grad_(b.id), true);
    };
    return Var{id};
}

Var Tape::matmul_nt(Var a, Var b) {
    Mat out;
    mm_nt(val_(a.id), val_(b.id), out, false);
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, a, b]() {
        const Mat& g = grad_(id);
        mm_nn(g, val_(b.id), grad_(a.id), true);
        mm_tn(g, val_(a.id), grad_(b.id), true);
    };
    return Var{id};
}

Var Tape::gelu(Var a) {
    Mat out = val_(a.id);
    for (double& v : out.a) v = gelu_fwd(v);
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, a]() {
        const Mat& g = grad_(id);
        const Mat& x = val_(a.id);
        Mat& ga = grad_(a.id);
        for (size_t i = 0; i < g.size(); ++i) ga.a[i] += g.a[i] * gelu_grad(x.a[i]);
    };
    return Var{id};
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Mat& X = val_(x.id);
    const Mat& G = val_(gain.id);
    const Mat& B = val_(bias.id);
    if (G.rows != 1 || G.cols != X.cols || B.rows != 1 || B.cols != X.cols) {
        throw std::invalid_argument("layer_norm: gain/bias shape mismatch");
    }
    const int n = X.cols;
    auto xhat = std::make_shared<Mat>(X.rows, n);
    auto inv_std = std::make_shared<std::vector<double>>(X.rows, 0.0);
    Mat out(X.rows, n);
    for (int r = 0; r < X.rows; ++r) {
        const double* xr = X.row_ptr(r);
        double mean = 0.0;
        for (int c = 0; c < n; ++c) mean += xr[c];
        mean /= n;
        double var = 0.0;
        for (int c = 0; c < n; ++c) {
            const double d = xr[c] - mean;
            var += d * d;
        }
        var /= n;
        const double istd = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = istd;
        double* hr = xhat->row_ptr(r);
        double* orow = out.row_ptr(r);
        for (int c = 0; c < n; ++c) {
            hr[c] = (xr[c] - mean) * istd;
            orow[c] = G.a[c] * hr[c] + B.a[c];
        }
    }
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, x, gain, bias, xhat, inv_std]() {
        const Mat& g = grad_(id);
        const Mat& G = val_(gain.id);
        Mat& gx = grad_(x.id);
        Mat& gg = grad_(gain.id);
        Mat& gb = grad_(bias.id);
        const int n = g.cols;
        for (int r = 0; r < g.rows; ++r) {
            const double* grow = g.row_ptr(r);
            const double* hr = xhat->row_ptr(r);
            double* gxr = gx.row_ptr(r);
            double mean_dh = 0.0, mean_dh_h = 0.0;
            for (int c = 0; c < n; ++c) {
                const double dh = grow[c] * G.a[c];
                mean_dh += dh;
                mean_dh_h += dh * hr[c];
                gg.a[c] += grow[c] * hr[c];
                gb.a[c] += grow[c];
            }
            mean_dh /= n;
            mean_dh_h /= n;
            const double istd = (*inv_std)[r];
            for (int c = 0; c < n; ++c) {
                const double dh = grow[c] * G.a[c];
                gxr[c] += istd * (dh - mean_dh - hr[c] * mean_dh_h);
            }
        }
    };
    return Var{id};
}

Var Tape::rows(Var x, std::vector<int> ids) {
    const Mat& X = val_(x.id);
    Mat out(static_cast<int>(ids.size()), X.cols);
    for (size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || ids[r] >= X.rows) throw std::invalid_argument("rows: index out of range");
        std::copy(X.row_ptr(ids[r]), X.row_ptr(ids[r]) + X.cols, out.row_ptr(static_cast<int>(r)));
    }
    const int id = push_(std::move(out));
    auto idx = std::make_shared<std::vector<int>>(std::move(ids));
    nodes_[id].back = [this, id, x, idx]() {
        const Mat& g = grad_(id);
        Mat& gx = grad_(x.id);
        for (size_t r = 0; r < idx->size(); ++r) {
            double* dst = gx.row_ptr((*idx)[r]);
            const double* src = g.row_ptr(static_cast<int>(r));
            for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
        }
    };
    return Var{id};
}

Var Tape::slice_cols(Var x, int c0, int c1) {
    const Mat& X = val_(x.id);
    if (c0 < 0 || c1 > X.cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
    Mat out(X.rows, c1 - c0);
    for (int r = 0; r < X.rows; ++r) {
        std::copy(X.row_ptr(r) + c0, X.row_ptr(r) + c1, out.row_ptr(r));
    }
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, x, c0]() {
        const Mat& g = grad_(id);
        Mat& gx = grad_(x.id);
        for (int r = 0; r < g.rows; ++r) {
            double* dst = gx.row_ptr(r) + c0;
            const double* src = g.row_ptr(r);
            for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
        }
    };
    return Var{id};
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_cols: empty");
    const int rows = val_(xs[0].id).rows;
    int cols = 0;
    for (Var v : xs) {
        if (val_(v.id).rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
        cols += val_(v.id).cols;
    }
    Mat out(rows, cols);
    int off = 0;
    for (Var v : xs) {
        const Mat& X = val_(v.id);
        for (int r = 0; r < rows; ++r) {
            std::copy(X.row_ptr(r), X.row_ptr(r) + X.cols, out.row_ptr(r) + off);
        }
        off += X.cols;
    }
    const int id = push_(std::move(out));
    auto parts = std::make_shared<std::vector<Var>>(xs);
    nodes_[id].back = [this, id, parts]() {
        const Mat& g = grad_(id);
        int off = 0;
        for (Var v : *parts) {
            Mat& gx = grad_(v.id);
            for (int r = 0; r < g.rows; ++r) {
                const double* src = g.row_ptr(r) + off;
                double* dst = gx.row_ptr(r);
                for (int c = 0; c < gx.cols; ++c) dst[c] += src[c];
            }
            off += gx.cols;
        }
    };
    return Var{id};
}

Var Tape::concat_rows(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_rows: empty");
    const int cols = val_(xs[0].id).cols;
    int rows = 0;
    for (Var v : xs) {
        if (val_(v.id).cols != cols) throw std::invalid_argument("concat_rows: col mismatch");
        rows += val_(v.id).rows;
    }
    Mat out(rows, cols);
    int off = 0;
    for (Var v : xs) {
        const Mat& X = val_(v.id);
        std::copy(X.a.begin(), X.a.end(), out.a.begin() + static_cast<size_t>(off) * cols);
        off += X.rows;
    }
    const int id = push_(std::move(out));
    auto parts = std::make_shared<std::vector<Var>>(xs);
    nodes_[id].back = [this, id, parts]() {
        const Mat& g = grad_(id);
        int off = 0;
        for (Var v : *parts) {
            Mat& gx = grad_(v.id);
            const double* src = g.a.data() + static_cast<size_t>(off) * g.cols;
            for (size_t i = 0; i < gx.size(); ++i) gx.a[i] += src[i];
            off += gx.rows;
        }
    };
    return Var{id};
}

Var Tape::softmax_rows(Var scores, const std::vector<uint8_t>* valid) {
    const Mat& S = val_(scores.id);
    if (valid && valid->size() != S.size()) throw std::invalid_argument("softmax_rows: mask size mismatch");
    Mat out(S.rows, S.cols);
    for (int r = 0; r < S.rows; ++r) {
        const double* srow = S.row_ptr(r);
        double* orow = out.row_ptr(r);
        const uint8_t* vrow = valid ? valid->data() + static_cast<size_t>(r) * S.cols : nullptr;
        double maxv = -1e300;
        bool any = false;
        for (int c = 0; c < S.cols; ++c) {
            if (vrow && !vrow[c]) continue;
            any = true;
            if (srow[c] > maxv) maxv = srow[c];
        }
        if (!any) throw std::invalid_argument("softmax_rows: fully masked row");
        double z = 0.0;
        for (int c = 0; c < S.cols; ++c) {
            if (vrow && !vrow[c]) {
                orow[c] = 0.0;
                continue;
            }
            orow[c] = std::exp(srow[c] - maxv);
            z += orow[c];
        }
        for (int c = 0; c < S.cols; ++c) orow[c] /= z;
    }
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, scores]() {
        const Mat& g = grad_(id);
        const Mat& p = val_(id);
        Mat& gs = grad_(scores.id);
        for (int r = 0; r < g.rows; ++r) {
            const double* grow = g.row_ptr(r);
            const double* prow = p.row_ptr(r);
            double dot = 0.0;
            for (int c = 0; c < g.cols; ++c) dot += grow[c] * prow[c];
            double* gsrow = gs.row_ptr(r);
            for (int c = 0; c < g.cols; ++c) gsrow[c] += prow[c] * (grow[c] - dot);
        }
    };
    return Var{id};
}

Var Tape::bce_with_logits(Var scores, Mat y, Mat w, double denom) {
    const Mat& S = val_(scores.id);
    if (!S.same_shape(y) || !S.same_shape(w)) throw std::invalid_argument("bce_with_logits: shape mismatch");
    if (denom <= 0.0) throw std::invalid_argument("bce_with_logits: denom must be positive");
    double total = 0.0;
    for (size_t i = 0; i < S.size(); ++i) {
        total += w.a[i] * (softplus(S.a[i]) - S.a[i] * y.a[i]);
    }
    Mat out(1, 1);
    out.a[0] = total / denom;
    const int id = push_(std::move(out));
    auto ys = std::make_shared<Mat>(std::move(y));
    auto ws = std::make_shared<Mat>(std::move(w));
    nodes_[id].back = [this, id, scores, ys, ws, denom]() {
        const double g = grad_(id).a[0];
        const Mat& S = val_(scores.id);
        Mat& gs = grad_(scores.id);
        for (size_t i = 0; i < S.size(); ++i) {
            gs.a[i] += g * ws->a[i] * (sigmoid(S.a[i]) - ys->a[i]) / denom;
        }
    };
    return Var{id};
}

Var Tape::cross_entropy_rows(Var logits, std::vector<int> targets) {
    const Mat& Z = val_(logits.id);
    if (static_cast<int>(targets.size()) != Z.rows) {
        throw std::invalid_argument("cross_entropy_rows: target count mismatch");
    }
    if (Z.rows == 0) throw std::invalid_argument("cross_entropy_rows: empty batch");
    auto probs = std::make_shared<Mat>(Z.rows, Z.cols);
    double total = 0.0;
    for (int r = 0; r < Z.rows; ++r) {
        const int t = targets[r];
        if (t < 0 || t >= Z.cols) throw std::invalid_argument("cross_entropy_rows: target out of range");
        const double* zrow = Z.row_ptr(r);
        double maxv = zrow[0];
        for (int c = 1; c < Z.cols; ++c) maxv = std::max(maxv, zrow[c]);
        double z = 0.0;
        double* prow = probs->row_ptr(r);
        for (int c = 0; c < Z.cols; ++c) {
            prow[c] = std::exp(zrow[c] - maxv);
            z += prow[c];
        }
        for (int c = 0; c < Z.cols; ++c) prow[c] /= z;
        total += maxv + std::log(z) - zrow[t];
    }
    Mat out(1, 1);
    out.a[0] = total / Z.rows;
    const int id = push_(std::move(out));
    auto tgt = std::make_shared<std::vector<int>>(std::move(targets));
    nodes_[id].back = [this, id, logits, probs, tgt]() {
        const double g = grad_(id).a[0];
        Mat& gz = grad_(logits.id);
        const double scale = g / probs->rows;
        for (int r = 0; r < probs->rows; ++r) {
            const double* prow = probs->row_ptr(r);
            double* grow = gz.row_ptr(r);
            for (int c = 0; c < probs->cols; ++c) grow[c] += scale * prow[c];
            grow[(*tgt)[r]] -= scale;
        }
    };
    return Var{id};
}

Var Tape::axpy(Var a, Var b, double sb) {
    const Mat& A = val_(a.id);
    const Mat& B = val_(b.id);
    if (!A.same_shape(B)) throw std::invalid_argument("axpy: shape mismatch");
    Mat out = A;
    for (size_t i = 0; i < out.size(); ++i) out.a[i] += sb * B.a[i];
    const int id = push_(std::move(out));
    nodes_[id].back = [this, id, a, b, sb]() {
        const Mat& g = grad_(id);
        Mat& ga = grad_(a.id);
        Mat& gb = grad_(b.id);
        for (size_t i = 0; i < g.size(); ++i) {
            ga.a[i] += g.a[i];
            gb.a[i] += sb * g.a[i];
        }
    };
    return Var{id};
}

double Tape::scalar(Var v) const {
    const Mat& m = val_(v.id);
    if (m.rows != 1 || m.cols != 1) throw std::invalid_argument("scalar: node is not 1x1");
    return m.a[0];
}

void Tape::backward(Var loss) {
    if (!loss.valid() || loss.id >= static_cast<int>(nodes_.size())) {
        throw std::invalid_argument("backward: invalid loss node");
    }
    for (auto& n : nodes_) {
        n.grad = Mat(n.value.rows, n.value.cols);
    }
    nodes_[loss.id].grad.a[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        if (nodes_[i].back) nodes_[i].back();
        if (nodes_[i].bound) {
            Mat& pg = nodes_[i].bound->grad;
            const Mat& g = nodes_[i].grad;
            for (size_t j = 0; j < g.size(); ++j) pg.a[j] += g.a[j];
        }
    }
}

void Tape::clear() {
    nodes_.clear();
    param_nodes_.clear();
}

Adam::Adam(std::vector<ParamPtr> params, double learning_rate, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->value.rows, p->value.cols);
        v_.emplace_back(p->value.rows, p->value.cols);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
        Mat& theta = params_[i]->value;
        const Mat& g = params_[i]->grad;
        Mat& m = m_[i];
        Mat& v = v_[i];
        for (size_t j = 0; j < theta.size(); ++j) {
            m.a[j] = beta1_ * m.a[j] + (1.0 - beta1_) * g.a[j];
            v.a[j] = beta2_ * v.a[j] + (1.0 - beta2_) * g.a[j] * g.a[j];
            const double mhat = m.a[j] / bc1;
            const double vhat = v.a[j] / bc2;
            theta.a[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

double global_grad_norm(const std::vector<ParamPtr>& params) {
    double sq = 0.0;
    for (const auto& p : params) {
        for (double g : p->grad.a) sq += g * g;
    }
    return std::sqrt(sq);
}

void clip_global_grad_norm(const std::vector<ParamPtr>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (norm <= max_norm || norm == 0.0) return;
    const double s = max_norm / norm;
    for (const auto& p : params) {
        for (double& g : p->grad.a) g *= s;
    }
}

} // namespace typeforge::nn
