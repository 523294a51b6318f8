#pragma once

#include <Eigen/Core>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "evnav/rng.hpp"

namespace evnav {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Param {
    std::string name;
    Mat value;
    Mat grad;

    Param() = default;
    Param(std::string n, int rows, int cols)
        : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}
};

// Flat view over a set of named parameters with their gradients. Flatten and
// unflatten round-trip exactly (fixed segment order).
class ParamVector {
public:
    void add(Param* p) { items_.push_back(p); }
    void extend(const ParamVector& other) {
        items_.insert(items_.end(), other.items_.begin(), other.items_.end());
    }
    const std::vector<Param*>& items() const { return items_; }
    Eigen::Index size() const;
    void zero_grads();
    Vec flatten_values() const;
    void set_values(const Vec& v);
    Vec flatten_grads() const;
    void set_grads(const Vec& g);
    bool overlaps(const ParamVector& other) const;

private:
    std::vector<Param*> items_;
};

// Versioned binary checkpoint: header (magic, version, segment table of
// names/shapes) followed by little-endian f64 arrays. Bit-exact round-trip.
void save_checkpoint(const ParamVector& params, const std::string& path);
void load_checkpoint(ParamVector& params, const std::string& path);

enum class Activation { Linear, Relu };

struct DenseCache {
    Vec x;
    Vec pre;
};

class DenseLayer {
public:
    DenseLayer(const std::string& name, int in, int out, Activation act, SeededRng& rng);

    Vec forward(const Vec& x, DenseCache& cache) const;
    // Accumulates into W.grad / b.grad, returns dL/dx.
    Vec backward(const Vec& dy, const DenseCache& cache);

    int in_dim() const { return static_cast<int>(W.value.cols()); }
    int out_dim() const { return static_cast<int>(W.value.rows()); }
    ParamVector params();

    Param W, b;
    Activation act;
};

struct MlpCache {
    std::vector<DenseCache> layers;
};

// Dense stack: ReLU on hidden layers, linear output head.
class Mlp {
public:
    Mlp(const std::string& name, const std::vector<int>& dims, SeededRng& rng);

    Vec forward(const Vec& x, MlpCache& cache) const;
    Vec backward(const Vec& dy, const MlpCache& cache);
    ParamVector params();
    void copy_from(const Mlp& other);

    std::vector<DenseLayer> layers;
};

// Running per-layer hidden/cell state for step-wise execution.
struct LstmState {
    std::vector<Vec> h;
    std::vector<Vec> c;
};

// Stacked LSTM (standard cell: input/forget/output gates, tanh cell).
// Training runs whole windows from zero state with full BPTT; execution uses
// the stateful step().
class Lstm {
public:
    Lstm(const std::string& name, int input_dim, int hidden_dim, int num_layers, SeededRng& rng);

    struct Cache {
        // per layer, per step
        std::vector<std::vector<Vec>> x, i, f, g, o, c, h;
    };

    // Forward over a window from zero state; returns the final top hidden state.
    Vec forward(const std::vector<Vec>& window, Cache& cache) const;
    // BPTT over the cached window given dL/d(final top hidden state).
    void backward(const Vec& d_final_h, const Cache& cache);

    LstmState zero_state() const;
    Vec step(const Vec& x, LstmState& state) const;

    int hidden_dim() const { return hidden_; }
    int input_dim() const { return input_; }
    ParamVector params();

    struct LayerParams {
        Param Wx, Wh, b;  // gate order: input, forget, cell, output
    };
    std::vector<LayerParams> cells;

private:
    int input_, hidden_, layers_;
};

// z = mu + exp(logvar/2) .* eps; gradients flow to mu and logvar only.
Vec gaussian_reparam(const Vec& mu, const Vec& logvar, const Vec& eps);
void gaussian_reparam_backward(const Vec& dz, const Vec& logvar, const Vec& eps,
                               Vec& dmu, Vec& dlogvar);

// KL(N(mu, diag exp(logvar)) || N(0, I)); always >= 0.
double kl_diag_gaussian(const Vec& mu, const Vec& logvar);
void kl_diag_gaussian_backward(const Vec& mu, const Vec& logvar, double dkl,
                               Vec& dmu, Vec& dlogvar);

Vec softmax_vec(const Vec& x);
Vec softmax_backward(const Vec& y, const Vec& dy);

constexpr double kLogvarClamp = 10.0;

class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamVector& params);
    double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Mat> m_, v_;
};

// Central-difference check of an analytic gradient; returns the max relative
// error over all coordinates.
double gradient_check(ParamVector& params, const std::function<double()>& loss,
                      const Vec& analytic_grad, double h = 1e-5);

}  // namespace evnav
