#include "ellab/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ellab {

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.w.a.size() + l.b.size();
    return n;
}

bool Mlp::operator==(const Mlp& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].act != o.layers[i].act) return false;
        if (!(layers[i].w == o.layers[i].w)) return false;
        if (layers[i].b != o.layers[i].b) return false;
    }
    return true;
}

Mlp make_mlp(int in, const std::vector<int>& hidden, int out, Rng& rng) {
    if (in < 1 || out < 1) throw std::invalid_argument("make_mlp: dims must be >= 1");
    Mlp m;
    int prev = in;
    auto push = [&](int width, Activation act) {
        Layer l;
        l.w = Mat(width, prev);
        l.b = Vec(width, 0.0);
        l.act = act;
        const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
        for (double& v : l.w.a) v = rng.uniform(-bound, bound);
        m.layers.push_back(std::move(l));
        prev = width;
    };
    for (int h : hidden) push(h, Activation::Relu);
    push(out, Activation::Identity);
    return m;
}

void GradBuffer::zero() {
    for (Mat& m : w) std::fill(m.a.begin(), m.a.end(), 0.0);
    for (Vec& v : b) std::fill(v.begin(), v.end(), 0.0);
}

void GradBuffer::scale(double s) {
    for (Mat& m : w)
        for (double& x : m.a) x *= s;
    for (Vec& v : b)
        for (double& x : v) x *= s;
}

double GradBuffer::squared_norm() const {
    double s = 0.0;
    for (const Mat& m : w)
        for (double x : m.a) s += x * x;
    for (const Vec& v : b)
        for (double x : v) s += x * x;
    return s;
}

GradBuffer zeros_like(const Mlp& m) {
    GradBuffer g;
    g.w.reserve(m.layers.size());
    g.b.reserve(m.layers.size());
    for (const Layer& l : m.layers) {
        g.w.emplace_back(l.w.rows, l.w.cols);
        g.b.emplace_back(l.b.size(), 0.0);
    }
    return g;
}

Vec mlp_forward(const Mlp& m, std::span<const double> x, ForwardCache* cache) {
    if (m.layers.empty()) throw std::invalid_argument("mlp_forward: empty network");
    if (static_cast<int>(x.size()) != m.in_dim())
        throw std::invalid_argument("mlp_forward: input size " + std::to_string(x.size()) +
                                    " does not match first layer width " +
                                    std::to_string(m.in_dim()));
    if (cache) {
        cache->input.assign(x.begin(), x.end());
        cache->pre.assign(m.layers.size(), {});
        cache->post.assign(m.layers.size(), {});
    }
    Vec cur(x.begin(), x.end());
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        const Layer& l = m.layers[li];
        Vec next(l.w.rows);
        matvec(l.w, cur, next);
        for (int r = 0; r < l.w.rows; ++r) next[r] += l.b[r];
        if (cache) cache->pre[li] = next;
        if (l.act == Activation::Relu) {
            for (double& v : next)
                if (v < 0.0) v = 0.0;
        }
        if (!all_finite(next))
            throw std::runtime_error("mlp_forward: non-finite activation at layer " +
                                     std::to_string(li));
        if (cache) cache->post[li] = next;
        cur = std::move(next);
    }
    return cur;
}

Vec mlp_backward(const Mlp& m, const ForwardCache& cache, std::span<const double> dout,
                 GradBuffer& grads) {
    if (grads.w.size() != m.layers.size()) throw std::invalid_argument("mlp_backward: grad shape");
    Vec delta(dout.begin(), dout.end());
    for (int li = static_cast<int>(m.layers.size()) - 1; li >= 0; --li) {
        const Layer& l = m.layers[li];
        if (static_cast<int>(delta.size()) != l.w.rows)
            throw std::invalid_argument("mlp_backward: delta shape at layer " + std::to_string(li));
        if (l.act == Activation::Relu) {
            const Vec& pre = cache.pre[li];
            for (int r = 0; r < l.w.rows; ++r)
                if (pre[r] <= 0.0) delta[r] = 0.0;
        }
        const Vec& below = (li == 0) ? cache.input : cache.post[li - 1];
        Mat& gw = grads.w[li];
        Vec& gb = grads.b[li];
        for (int r = 0; r < l.w.rows; ++r) {
            const double d = delta[r];
            gb[r] += d;
            double* grow = gw.row(r);
            for (int c = 0; c < l.w.cols; ++c) grow[c] += d * below[c];
        }
        Vec next(l.w.cols, 0.0);
        for (int r = 0; r < l.w.rows; ++r) {
            const double d = delta[r];
            const double* wrow = l.w.row(r);
            for (int c = 0; c < l.w.cols; ++c) next[c] += d * wrow[c];
        }
        delta = std::move(next);
    }
    return delta;
}

RmsPropState make_rmsprop_state(const Mlp& m) {
    RmsPropState s;
    s.sq = zeros_like(m);
    return s;
}

void rmsprop_step(Mlp& params, const GradBuffer& grads, RmsPropState& state, double lr,
                  double smoothing, double eps) {
    if (!(lr > 0.0)) throw std::invalid_argument("rmsprop_step: lr must be > 0");
    if (!(smoothing > 0.0 && smoothing < 1.0))
        throw std::invalid_argument("rmsprop_step: smoothing must be in (0,1)");
    if (grads.w.size() != params.layers.size())
        throw std::invalid_argument("rmsprop_step: grad shape mismatch");
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        Layer& l = params.layers[li];
        if (grads.w[li].rows != l.w.rows || grads.w[li].cols != l.w.cols ||
            grads.b[li].size() != l.b.size())
            throw std::invalid_argument("rmsprop_step: grad shape mismatch at layer " +
                                        std::to_string(li));
        Mat& sw = state.sq.w[li];
        for (std::size_t i = 0; i < l.w.a.size(); ++i) {
            const double g = grads.w[li].a[i];
            sw.a[i] = smoothing * sw.a[i] + (1.0 - smoothing) * g * g;
            l.w.a[i] -= lr * g / (std::sqrt(sw.a[i]) + eps);
        }
        Vec& sb = state.sq.b[li];
        for (std::size_t i = 0; i < l.b.size(); ++i) {
            const double g = grads.b[li][i];
            sb[i] = smoothing * sb[i] + (1.0 - smoothing) * g * g;
            l.b[i] -= lr * g / (std::sqrt(sb[i]) + eps);
        }
    }
    ++state.steps;
}

double grad_global_norm(const std::vector<const GradBuffer*>& grads) {
    double s = 0.0;
    for (const GradBuffer* g : grads) s += g->squared_norm();
    return std::sqrt(s);
}

void clip_global_norm(const std::vector<GradBuffer*>& grads, double max_norm) {
    double s = 0.0;
    for (GradBuffer* g : grads) s += g->squared_norm();
    const double norm = std::sqrt(s);
    if (norm > max_norm && norm > 0.0) {
        const double f = max_norm / norm;
        for (GradBuffer* g : grads) g->scale(f);
    }
}

void save_mlp(std::ostream& out, const Mlp& m, std::uint64_t seed) {
    out << "mlp v1\n";
    out << "seed " << seed << "\n";
    out << "layers " << m.layers.size() << "\n";
    for (const Layer& l : m.layers) {
        out << "layer " << l.w.rows << " " << l.w.cols << " "
            << (l.act == Activation::Relu ? "relu" : "identity") << "\n";
    }
    out << "data\n";
    for (const Layer& l : m.layers) {
        out.write(reinterpret_cast<const char*>(l.w.a.data()),
                  static_cast<std::streamsize>(l.w.a.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(l.b.data()),
                  static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    }
}

Mlp load_mlp(std::istream& in, std::uint64_t* seed) {
    std::string line;
    if (!std::getline(in, line) || line != "mlp v1")
        throw std::runtime_error("load_mlp: bad magic line");
    std::uint64_t s = 0;
    std::size_t nlayers = 0;
    {
        std::string tag;
        in >> tag >> s;
        if (tag != "seed") throw std::runtime_error("load_mlp: expected seed line");
        in >> tag >> nlayers;
        if (tag != "layers") throw std::runtime_error("load_mlp: expected layers line");
    }
    Mlp m;
    for (std::size_t i = 0; i < nlayers; ++i) {
        std::string tag, act;
        int rows = 0, cols = 0;
        in >> tag >> rows >> cols >> act;
        if (tag != "layer" || rows < 1 || cols < 1)
            throw std::runtime_error("load_mlp: bad layer line " + std::to_string(i));
        Layer l;
        l.w = Mat(rows, cols);
        l.b = Vec(rows, 0.0);
        l.act = act == "relu" ? Activation::Relu : Activation::Identity;
        m.layers.push_back(std::move(l));
    }
    in >> line;
    if (line != "data") throw std::runtime_error("load_mlp: expected data marker");
    in.get();  // consume newline before the binary block
    for (Layer& l : m.layers) {
        in.read(reinterpret_cast<char*>(l.w.a.data()),
                static_cast<std::streamsize>(l.w.a.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(l.b.data()),
                static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    }
    if (!in) throw std::runtime_error("load_mlp: truncated parameter block");
    if (seed) *seed = s;
    return m;
}

}  // namespace ellab
