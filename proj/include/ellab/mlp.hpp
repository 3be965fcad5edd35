#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ellab/linalg.hpp"
#include "ellab/rng.hpp"

namespace ellab {

enum class Activation { Relu, Identity };

struct Layer {
    Mat w;  // out x in
    Vec b;  // out
    Activation act = Activation::Relu;
};

// Plain fully-connected network. All learned models in this project (feature
// encoders, inverse-dynamics and forward heads, RND nets, the policy) come
// from this one family so a single backward pass covers them.
struct Mlp {
    std::vector<Layer> layers;

    int in_dim() const { return layers.empty() ? 0 : layers.front().w.cols; }
    int out_dim() const { return layers.empty() ? 0 : layers.back().w.rows; }
    std::size_t param_count() const;

    bool operator==(const Mlp&) const;
};

// Hidden layers rectified-linear, output layer identity. Weights drawn
// uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
Mlp make_mlp(int in, const std::vector<int>& hidden, int out, Rng& rng);

// Parameter-shaped accumulator for gradients / optimizer moments.
struct GradBuffer {
    std::vector<Mat> w;
    std::vector<Vec> b;

    void zero();
    void scale(double s);
    double squared_norm() const;
};

GradBuffer zeros_like(const Mlp& m);

struct ForwardCache {
    Vec input;
    std::vector<Vec> pre;   // per-layer pre-activations
    std::vector<Vec> post;  // per-layer activations
};

// Deterministic forward pass. Caches enough for an exact backward pass when
// `cache` is given. Throws std::invalid_argument on a shape mismatch and
// std::runtime_error naming the layer if an activation goes non-finite.
Vec mlp_forward(const Mlp& m, std::span<const double> x, ForwardCache* cache = nullptr);

// Backpropagate dLoss/dOutput; accumulates parameter gradients into `grads`
// and returns dLoss/dInput.
Vec mlp_backward(const Mlp& m, const ForwardCache& cache, std::span<const double> dout,
                 GradBuffer& grads);

struct RmsPropState {
    GradBuffer sq;  // running square averages, >= 0
    long steps = 0;
};

RmsPropState make_rmsprop_state(const Mlp& m);

// s <- smoothing*s + (1-smoothing)*g^2 ; p <- p - lr*g/(sqrt(s)+eps)
void rmsprop_step(Mlp& params, const GradBuffer& grads, RmsPropState& state, double lr,
                  double smoothing, double eps);

// Global L2 norm across several gradient buffers.
double grad_global_norm(const std::vector<const GradBuffer*>& grads);

// Scales all buffers so the global norm is at most max_norm.
void clip_global_norm(const std::vector<GradBuffer*>& grads, double max_norm);

// Checkpoint format: text shape manifest (layer dims, activation tags, seed)
// followed by a flat little-endian float64 stream of weights then biases,
// layer by layer.
void save_mlp(std::ostream& out, const Mlp& m, std::uint64_t seed);
Mlp load_mlp(std::istream& in, std::uint64_t* seed = nullptr);

}  // namespace ellab
