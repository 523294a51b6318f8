#include "evnav/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace evnav {

Eigen::Index ParamVector::size() const {
    Eigen::Index n = 0;
    for (const Param* p : items_) n += p->value.size();
    return n;
}

void ParamVector::zero_grads() {
    for (Param* p : items_) p->grad.setZero();
}

Vec ParamVector::flatten_values() const {
    Vec out(size());
    Eigen::Index at = 0;
    for (const Param* p : items_) {
        out.segment(at, p->value.size()) = Eigen::Map<const Vec>(p->value.data(), p->value.size());
        at += p->value.size();
    }
    return out;
}

void ParamVector::set_values(const Vec& v) {
    Eigen::Index at = 0;
    for (Param* p : items_) {
        Eigen::Map<Vec>(p->value.data(), p->value.size()) = v.segment(at, p->value.size());
        at += p->value.size();
    }
}

Vec ParamVector::flatten_grads() const {
    Vec out(size());
    Eigen::Index at = 0;
    for (const Param* p : items_) {
        out.segment(at, p->grad.size()) = Eigen::Map<const Vec>(p->grad.data(), p->grad.size());
        at += p->grad.size();
    }
    return out;
}

void ParamVector::set_grads(const Vec& g) {
    Eigen::Index at = 0;
    for (Param* p : items_) {
        Eigen::Map<Vec>(p->grad.data(), p->grad.size()) = g.segment(at, p->grad.size());
        at += p->grad.size();
    }
}

bool ParamVector::overlaps(const ParamVector& other) const {
    for (const Param* a : items_)
        for (const Param* b : other.items_)
            if (a == b) return true;
    return false;
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

constexpr std::uint32_t kMagic = 0x43564e45;  // "EVNC"
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const ParamVector& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NetError("cannot write checkpoint: " + path);
    write_pod(out, kMagic);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint32_t>(params.items().size()));
    for (const Param* p : params.items()) {
        write_pod(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_pod(out, static_cast<std::uint32_t>(p->value.rows()));
        write_pod(out, static_cast<std::uint32_t>(p->value.cols()));
    }
    for (const Param* p : params.items()) {
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    }
}

void load_checkpoint(ParamVector& params, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NetError("cannot read checkpoint: " + path);
    if (read_pod<std::uint32_t>(in) != kMagic) throw NetError("bad checkpoint magic");
    if (read_pod<std::uint32_t>(in) != kVersion) throw NetError("unsupported checkpoint version");
    auto count = read_pod<std::uint32_t>(in);
    if (count != params.items().size()) throw NetError("checkpoint segment count mismatch");
    for (Param* p : const_cast<std::vector<Param*>&>(params.items())) {
        auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        auto rows = read_pod<std::uint32_t>(in);
        auto cols = read_pod<std::uint32_t>(in);
        if (name != p->name || rows != p->value.rows() || cols != p->value.cols())
            throw NetError("checkpoint segment mismatch at " + p->name);
    }
    for (Param* p : const_cast<std::vector<Param*>&>(params.items())) {
        in.read(reinterpret_cast<char*>(p->value.data()),
                static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    }
    if (!in) throw NetError("truncated checkpoint: " + path);
}

static void check_finite(const Vec& x, const char* where) {
    if (!x.allFinite()) throw NetError(std::string("non-finite values at ") + where);
}

static Mat xavier(int rows, int cols, SeededRng& rng) {
    double limit = std::sqrt(6.0 / (rows + cols));
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
    return m;
}

DenseLayer::DenseLayer(const std::string& name, int in, int out, Activation a, SeededRng& rng)
    : W(name + ".W", out, in), b(name + ".b", out, 1), act(a) {
    W.value = xavier(out, in, rng);
}

Vec DenseLayer::forward(const Vec& x, DenseCache& cache) const {
    if (x.size() != W.value.cols()) throw NetError("dense: input shape mismatch");
    check_finite(x, W.name.c_str());
    cache.x = x;
    cache.pre = W.value * x + b.value.col(0);
    if (act == Activation::Relu) return cache.pre.cwiseMax(0.0);
    return cache.pre;
}

Vec DenseLayer::backward(const Vec& dy, const DenseCache& cache) {
    Vec dpre = dy;
    if (act == Activation::Relu)
        dpre = dy.cwiseProduct((cache.pre.array() > 0.0).cast<double>().matrix());
    W.grad += dpre * cache.x.transpose();
    b.grad.col(0) += dpre;
    return W.value.transpose() * dpre;
}

ParamVector DenseLayer::params() {
    ParamVector p;
    p.add(&W);
    p.add(&b);
    return p;
}

Mlp::Mlp(const std::string& name, const std::vector<int>& dims, SeededRng& rng) {
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Activation act = (i + 2 == dims.size()) ? Activation::Linear : Activation::Relu;
        layers.emplace_back(name + ".l" + std::to_string(i), dims[i], dims[i + 1], act, rng);
    }
}

Vec Mlp::forward(const Vec& x, MlpCache& cache) const {
    cache.layers.resize(layers.size());
    Vec h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) h = layers[i].forward(h, cache.layers[i]);
    return h;
}

Vec Mlp::backward(const Vec& dy, const MlpCache& cache) {
    Vec d = dy;
    for (std::size_t i = layers.size(); i-- > 0;) d = layers[i].backward(d, cache.layers[i]);
    return d;
}

ParamVector Mlp::params() {
    ParamVector p;
    for (DenseLayer& l : layers) p.extend(l.params());
    return p;
}

void Mlp::copy_from(const Mlp& other) {
    if (layers.size() != other.layers.size()) throw NetError("copy_from: structure mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].W.value.rows() != other.layers[i].W.value.rows() ||
            layers[i].W.value.cols() != other.layers[i].W.value.cols())
            throw NetError("copy_from: layer shape mismatch");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].W.value = other.layers[i].W.value;
        layers[i].b.value = other.layers[i].b.value;
    }
}

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Lstm::Lstm(const std::string& name, int input_dim, int hidden_dim, int num_layers, SeededRng& rng)
    : input_(input_dim), hidden_(hidden_dim), layers_(num_layers) {
    for (int l = 0; l < num_layers; ++l) {
        int in = (l == 0) ? input_dim : hidden_dim;
        std::string base = name + ".l" + std::to_string(l);
        LayerParams lp{Param(base + ".Wx", 4 * hidden_dim, in),
                       Param(base + ".Wh", 4 * hidden_dim, hidden_dim),
                       Param(base + ".b", 4 * hidden_dim, 1)};
        lp.Wx.value = xavier(4 * hidden_dim, in, rng);
        lp.Wh.value = xavier(4 * hidden_dim, hidden_dim, rng);
        cells.push_back(std::move(lp));
    }
}

LstmState Lstm::zero_state() const {
    LstmState s;
    s.h.assign(layers_, Vec::Zero(hidden_));
    s.c.assign(layers_, Vec::Zero(hidden_));
    return s;
}

Vec Lstm::step(const Vec& x, LstmState& state) const {
    Vec input = x;
    for (int l = 0; l < layers_; ++l) {
        const LayerParams& p = cells[l];
        Vec pre = p.Wx.value * input + p.Wh.value * state.h[l] + p.b.value.col(0);
        const int H = hidden_;
        Vec i(H), f(H), g(H), o(H);
        for (int k = 0; k < H; ++k) {
            i[k] = sigmoid(pre[k]);
            f[k] = sigmoid(pre[H + k]);
            g[k] = std::tanh(pre[2 * H + k]);
            o[k] = sigmoid(pre[3 * H + k]);
        }
        state.c[l] = f.cwiseProduct(state.c[l]) + i.cwiseProduct(g);
        state.h[l] = o.cwiseProduct(state.c[l].array().tanh().matrix());
        input = state.h[l];
    }
    return input;
}

Vec Lstm::forward(const std::vector<Vec>& window, Cache& cache) const {
    if (window.empty()) throw NetError("lstm: empty window");
    const std::size_t T = window.size();
    cache.x.assign(layers_, {});
    cache.i.assign(layers_, {});
    cache.f.assign(layers_, {});
    cache.g.assign(layers_, {});
    cache.o.assign(layers_, {});
    cache.c.assign(layers_, {});
    cache.h.assign(layers_, {});

    std::vector<Vec> layer_in = window;
    for (int l = 0; l < layers_; ++l) {
        const LayerParams& p = cells[l];
        Vec h_prev = Vec::Zero(hidden_);
        Vec c_prev = Vec::Zero(hidden_);
        std::vector<Vec> outputs(T);
        for (std::size_t t = 0; t < T; ++t) {
            check_finite(layer_in[t], "lstm input");
            Vec pre = p.Wx.value * layer_in[t] + p.Wh.value * h_prev + p.b.value.col(0);
            const int H = hidden_;
            Vec i(H), f(H), g(H), o(H);
            for (int k = 0; k < H; ++k) {
                i[k] = sigmoid(pre[k]);
                f[k] = sigmoid(pre[H + k]);
                g[k] = std::tanh(pre[2 * H + k]);
                o[k] = sigmoid(pre[3 * H + k]);
            }
            Vec c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
            Vec h = o.cwiseProduct(c.array().tanh().matrix());
            cache.x[l].push_back(layer_in[t]);
            cache.i[l].push_back(i);
            cache.f[l].push_back(f);
            cache.g[l].push_back(g);
            cache.o[l].push_back(o);
            cache.c[l].push_back(c);
            cache.h[l].push_back(h);
            outputs[t] = h;
            h_prev = h;
            c_prev = c;
        }
        layer_in = outputs;
    }
    return layer_in.back();
}

void Lstm::backward(const Vec& d_final_h, const Cache& cache) {
    const std::size_t T = cache.h[0].size();
    // dL/dh_t arriving from the layer above (or the loss, for the top layer)
    std::vector<Vec> dh_from_above(T, Vec::Zero(hidden_));
    dh_from_above[T - 1] = d_final_h;

    for (int l = layers_ - 1; l >= 0; --l) {
        LayerParams& p = cells[l];
        const int H = hidden_;
        std::vector<Vec> dx(T);
        Vec dh_next = Vec::Zero(H);
        Vec dc_next = Vec::Zero(H);
        for (std::size_t ti = T; ti-- > 0;) {
            const Vec& i = cache.i[l][ti];
            const Vec& f = cache.f[l][ti];
            const Vec& g = cache.g[l][ti];
            const Vec& o = cache.o[l][ti];
            const Vec& c = cache.c[l][ti];
            Vec tanh_c = c.array().tanh().matrix();
            Vec c_prev = (ti == 0) ? Vec(Vec::Zero(H)) : cache.c[l][ti - 1];
            Vec h_prev = (ti == 0) ? Vec(Vec::Zero(H)) : cache.h[l][ti - 1];

            Vec dh = dh_from_above[ti] + dh_next;
            Vec dc = dc_next +
                     dh.cwiseProduct(o).cwiseProduct(
                         (1.0 - tanh_c.array().square()).matrix());
            Vec do_ = dh.cwiseProduct(tanh_c);
            Vec di = dc.cwiseProduct(g);
            Vec dg = dc.cwiseProduct(i);
            Vec df = dc.cwiseProduct(c_prev);
            dc_next = dc.cwiseProduct(f);

            Vec dpre(4 * H);
            for (int k = 0; k < H; ++k) {
                dpre[k] = di[k] * i[k] * (1.0 - i[k]);
                dpre[H + k] = df[k] * f[k] * (1.0 - f[k]);
                dpre[2 * H + k] = dg[k] * (1.0 - g[k] * g[k]);
                dpre[3 * H + k] = do_[k] * o[k] * (1.0 - o[k]);
            }
            p.Wx.grad += dpre * cache.x[l][ti].transpose();
            p.Wh.grad += dpre * h_prev.transpose();
            p.b.grad.col(0) += dpre;
            dx[ti] = p.Wx.value.transpose() * dpre;
            dh_next = p.Wh.value.transpose() * dpre;
        }
        if (l > 0) dh_from_above = dx;
    }
}

ParamVector Lstm::params() {
    ParamVector p;
    for (LayerParams& lp : cells) {
        p.add(&lp.Wx);
        p.add(&lp.Wh);
        p.add(&lp.b);
    }
    return p;
}

Vec gaussian_reparam(const Vec& mu, const Vec& logvar, const Vec& eps) {
    if (mu.size() != logvar.size() || mu.size() != eps.size())
        throw NetError("reparam: shape mismatch");
    return mu + (logvar.array() / 2.0).exp().matrix().cwiseProduct(eps);
}

void gaussian_reparam_backward(const Vec& dz, const Vec& logvar, const Vec& eps,
                               Vec& dmu, Vec& dlogvar) {
    dmu += dz;
    dlogvar += 0.5 * dz.cwiseProduct(eps).cwiseProduct((logvar.array() / 2.0).exp().matrix());
}

double kl_diag_gaussian(const Vec& mu, const Vec& logvar) {
    return -0.5 * (1.0 + logvar.array() - mu.array().square() - logvar.array().exp()).sum();
}

void kl_diag_gaussian_backward(const Vec& mu, const Vec& logvar, double dkl,
                               Vec& dmu, Vec& dlogvar) {
    dmu += dkl * mu;
    dlogvar += dkl * 0.5 * (logvar.array().exp() - 1.0).matrix();
}

Vec softmax_vec(const Vec& x) {
    Vec e = (x.array() - x.maxCoeff()).exp();
    return e / e.sum();
}

Vec softmax_backward(const Vec& y, const Vec& dy) {
    double dot = y.dot(dy);
    return y.cwiseProduct(dy.array().matrix() - Vec::Constant(y.size(), dot));
}

void Adam::step(ParamVector& params) {
    auto& items = const_cast<std::vector<Param*>&>(params.items());
    if (m_.empty()) {
        for (Param* p : items) {
            m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
        }
    }
    if (m_.size() != items.size()) throw NetError("adam: parameter set changed");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < items.size(); ++i) {
        Param* p = items[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p->grad;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
        Mat mhat = m_[i] / bc1;
        Mat vhat = v_[i] / bc2;
        p->value -= lr_ * mhat.cwiseQuotient(vhat.cwiseSqrt() + Mat::Constant(vhat.rows(), vhat.cols(), eps_));
    }
}

double gradient_check(ParamVector& params, const std::function<double()>& loss,
                      const Vec& analytic_grad, double h) {
    Vec theta = params.flatten_values();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Vec pert = theta;
        pert[i] = theta[i] + h;
        params.set_values(pert);
        double up = loss();
        pert[i] = theta[i] - h;
        params.set_values(pert);
        double down = loss();
        double num = (up - down) / (2.0 * h);
        double err = std::abs(num - analytic_grad[i]) /
                     std::max(1.0, std::abs(num) + std::abs(analytic_grad[i]));
        worst = std::max(worst, err);
    }
    params.set_values(theta);
    return worst;
}

}  // namespace evnav
