#include "ellab/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ellab {

Vec one_hot_encode(int key, int dim) {
    if (dim < 1) throw std::invalid_argument("one_hot_encode: dim must be >= 1");
    if (key < 0 || key >= dim)
        throw std::invalid_argument("one_hot_encode: key " + std::to_string(key) +
                                    " outside [0, " + std::to_string(dim) + ")");
    Vec v(dim, 0.0);
    v[key] = 1.0;
    return v;
}

Encoder Encoder::build(const EncoderSpec& spec, std::uint64_t seed) {
    Encoder e;
    e.kind_ = spec.kind;
    e.seed_ = seed;
    Rng rng(seed);
    switch (spec.kind) {
        case EncoderKind::RandomNet: {
            if (spec.input_dim < 1) throw std::invalid_argument("Encoder: input_dim required");
            e.phi_ = make_mlp(spec.input_dim, spec.hidden, spec.feature_dim, rng);
            return e;
        }
        case EncoderKind::InverseDynamics: {
            if (spec.input_dim < 1) throw std::invalid_argument("Encoder: input_dim required");
            if (spec.num_actions < 1)
                throw std::invalid_argument("Encoder: inverse_dynamics needs num_actions");
            e.phi_ = make_mlp(spec.input_dim, spec.hidden, spec.feature_dim, rng);
            e.idm_ = make_mlp(2 * spec.feature_dim, {spec.idm_hidden}, spec.num_actions, rng);
            return e;
        }
        case EncoderKind::OneHot:
            throw std::invalid_argument("Encoder: one_hot needs a key function; use Encoder::one_hot");
        case EncoderKind::PolicyTrunk:
            throw std::invalid_argument("Encoder: policy_trunk needs a trunk; use Encoder::policy_tie");
    }
    throw std::invalid_argument("Encoder: unsupported encoder layout");
}

Encoder Encoder::policy_tie(const Mlp* trunk) {
    if (!trunk || trunk->layers.empty())
        throw std::invalid_argument("Encoder: policy_tie needs a non-empty trunk");
    Encoder e;
    e.kind_ = EncoderKind::PolicyTrunk;
    e.external_ = trunk;
    return e;
}

Encoder Encoder::one_hot(int key_space, std::function<int(std::span<const double>)> key_fn) {
    if (key_space < 1) throw std::invalid_argument("Encoder: one_hot key space must be >= 1");
    if (!key_fn) throw std::invalid_argument("Encoder: one_hot needs a key function");
    Encoder e;
    e.kind_ = EncoderKind::OneHot;
    e.key_space_ = key_space;
    e.key_fn_ = std::move(key_fn);
    return e;
}

int Encoder::out_dim() const {
    switch (kind_) {
        case EncoderKind::OneHot: return key_space_;
        case EncoderKind::PolicyTrunk: return external_->out_dim();
        default: return phi_.out_dim();
    }
}

Vec Encoder::encode(std::span<const double> input) const {
    switch (kind_) {
        case EncoderKind::OneHot: return one_hot_encode(key_fn_(input), key_space_);
        case EncoderKind::PolicyTrunk: return mlp_forward(*external_, input);
        default: return mlp_forward(phi_, input);
    }
}

Mlp& Encoder::phi() {
    if (kind_ == EncoderKind::OneHot || kind_ == EncoderKind::PolicyTrunk)
        throw std::logic_error("Encoder: no owned parameters for this kind");
    return phi_;
}

const Mlp& Encoder::phi() const {
    if (kind_ == EncoderKind::PolicyTrunk) return *external_;
    if (kind_ == EncoderKind::OneHot) throw std::logic_error("Encoder: one_hot has no parameters");
    return phi_;
}

Mlp& Encoder::idm_head() {
    if (kind_ != EncoderKind::InverseDynamics)
        throw std::logic_error("Encoder: only the inverse-dynamics kind carries an action head");
    return idm_;
}

const Mlp& Encoder::idm_head() const {
    return const_cast<Encoder*>(this)->idm_head();
}

Vec softmax(std::span<const double> logits) {
    double top = logits[0];
    for (double v : logits) top = std::max(top, v);
    Vec p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - top);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

double log_softmax_at(std::span<const double> logits, int index) {
    double top = logits[0];
    for (double v : logits) top = std::max(top, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - top);
    return logits[index] - top - std::log(z);
}

double idm_loss_acc(const Mlp& phi, const Mlp& g, std::span<const double> obs_t, int action,
                    std::span<const double> obs_next, GradBuffer& phi_grads, GradBuffer& g_grads,
                    double coeff) {
    const int n = phi.out_dim();
    if (g.in_dim() != 2 * n)
        throw std::invalid_argument("idm_loss_acc: g input width must be 2*feature_dim");
    const int num_actions = g.out_dim();
    if (action < 0 || action >= num_actions)
        throw std::invalid_argument("idm_loss_acc: action index out of range");

    ForwardCache cache_t, cache_next, cache_g;
    const Vec f_t = mlp_forward(phi, obs_t, &cache_t);
    const Vec f_next = mlp_forward(phi, obs_next, &cache_next);
    Vec joint(2 * n);
    std::copy(f_t.begin(), f_t.end(), joint.begin());
    std::copy(f_next.begin(), f_next.end(), joint.begin() + n);
    const Vec logits = mlp_forward(g, joint, &cache_g);

    const double loss = -log_softmax_at(logits, action);
    if (!std::isfinite(loss))
        throw std::runtime_error("idm_loss_acc: non-finite loss at the softmax head");

    // d(-log softmax)/dlogits = p - one_hot(action)
    Vec dlogits = softmax(logits);
    dlogits[action] -= 1.0;
    if (coeff != 1.0)
        for (double& v : dlogits) v *= coeff;

    const Vec djoint = mlp_backward(g, cache_g, dlogits, g_grads);
    const std::span<const double> d_t(djoint.data(), static_cast<std::size_t>(n));
    const std::span<const double> d_next(djoint.data() + n, static_cast<std::size_t>(n));
    mlp_backward(phi, cache_t, d_t, phi_grads);
    mlp_backward(phi, cache_next, d_next, phi_grads);
    return loss;
}

IdmLoss idm_loss_and_grad(const Mlp& phi, const Mlp& g, std::span<const double> obs_t, int action,
                          std::span<const double> obs_next) {
    IdmLoss out;
    out.phi_grads = zeros_like(phi);
    out.g_grads = zeros_like(g);
    out.loss = idm_loss_acc(phi, g, obs_t, action, obs_next, out.phi_grads, out.g_grads);
    return out;
}

double forward_model_loss_acc(const Mlp& phi, const Mlp& f, std::span<const double> obs_t,
                              int action, std::span<const double> obs_next, GradBuffer& f_grads,
                              double coeff) {
    const int n = phi.out_dim();
    const int num_actions = f.in_dim() - n;
    if (num_actions < 1)
        throw std::invalid_argument("forward_model_loss_acc: f input must be feature_dim + |A|");
    if (f.out_dim() != n)
        throw std::invalid_argument("forward_model_loss_acc: f output width must match phi");
    if (action < 0 || action >= num_actions)
        throw std::invalid_argument("forward_model_loss_acc: action index out of range");

    const Vec f_t = mlp_forward(phi, obs_t);
    const Vec target = mlp_forward(phi, obs_next);  // constant: no gradient into phi
    Vec joint(f.in_dim(), 0.0);
    std::copy(f_t.begin(), f_t.end(), joint.begin());
    joint[n + action] = 1.0;

    ForwardCache cache_f;
    const Vec pred = mlp_forward(f, joint, &cache_f);

    double loss = 0.0;
    Vec dpred(n);
    for (int i = 0; i < n; ++i) {
        const double e = pred[i] - target[i];
        loss += 0.5 * e * e;
        dpred[i] = coeff * e;
    }
    if (!std::isfinite(loss))
        throw std::runtime_error("forward_model_loss_acc: non-finite loss at the output layer");
    mlp_backward(f, cache_f, dpred, f_grads);
    return loss;
}

ForwardModelLoss forward_model_loss_and_grad(const Mlp& phi, const Mlp& f,
                                             std::span<const double> obs_t, int action,
                                             std::span<const double> obs_next) {
    ForwardModelLoss out;
    out.f_grads = zeros_like(f);
    out.loss = forward_model_loss_acc(phi, f, obs_t, action, obs_next, out.f_grads);
    return out;
}

}  // namespace ellab
