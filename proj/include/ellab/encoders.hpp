#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ellab/mlp.hpp"

namespace ellab {

Vec one_hot_encode(int key, int dim);

enum class EncoderKind { OneHot, RandomNet, PolicyTrunk, InverseDynamics };

struct EncoderSpec {
    EncoderKind kind = EncoderKind::InverseDynamics;
    int input_dim = 0;              // raw observation vector length (net kinds)
    int feature_dim = 64;           // n
    std::vector<int> hidden = {64, 64};
    int num_actions = 0;            // inverse_dynamics: width of the action head output
    int idm_hidden = 256;           // action head hidden width
    int key_space = 0;              // one_hot: number of distinct keys
};

// Feature map phi used by the bonuses. encode() is a read-only view: it
// never touches parameters, so bonus computation cannot train the encoder.
// Only the inverse-dynamics kind is trainable here; the policy-trunk kind
// aliases an externally owned network and the random kind stays frozen.
class Encoder {
public:
    static Encoder build(const EncoderSpec& spec, std::uint64_t seed);

    // phi reads the last hidden layer of an externally owned trunk.
    static Encoder policy_tie(const Mlp* trunk);

    // Tabular phi; key_fn maps a raw observation vector to its key index.
    static Encoder one_hot(int key_space, std::function<int(std::span<const double>)> key_fn);

    EncoderKind kind() const { return kind_; }
    int out_dim() const;
    bool trainable() const { return kind_ == EncoderKind::InverseDynamics; }

    Vec encode(std::span<const double> input) const;

    Mlp& phi();
    const Mlp& phi() const;
    Mlp& idm_head();
    const Mlp& idm_head() const;
    std::uint64_t seed() const { return seed_; }

private:
    Encoder() = default;
    EncoderKind kind_ = EncoderKind::InverseDynamics;
    Mlp phi_;
    Mlp idm_;  // g: concat(phi(s), phi(s')) -> action logits
    const Mlp* external_ = nullptr;
    int key_space_ = 0;
    std::function<int(std::span<const double>)> key_fn_;
    std::uint64_t seed_ = 0;
};

struct IdmLoss {
    double loss = 0.0;
    GradBuffer phi_grads;
    GradBuffer g_grads;
};

// Softmax cross-entropy of g(concat(phi(s_t), phi(s_next))) against the
// taken action, with gradients flowing through both phi evaluations and g.
IdmLoss idm_loss_and_grad(const Mlp& phi, const Mlp& g, std::span<const double> obs_t, int action,
                          std::span<const double> obs_next);

// Same loss, but accumulates coeff-scaled gradients into caller-owned
// buffers; the batched path used by the learner.
double idm_loss_acc(const Mlp& phi, const Mlp& g, std::span<const double> obs_t, int action,
                    std::span<const double> obs_next, GradBuffer& phi_grads, GradBuffer& g_grads,
                    double coeff = 1.0);

struct ForwardModelLoss {
    double loss = 0.0;
    GradBuffer f_grads;
};

// 0.5 * || f(phi(s_t), one_hot(a)) - phi(s_next) ||^2 with the target
// embedding held constant; only f receives gradients.
ForwardModelLoss forward_model_loss_and_grad(const Mlp& phi, const Mlp& f,
                                             std::span<const double> obs_t, int action,
                                             std::span<const double> obs_next);

double forward_model_loss_acc(const Mlp& phi, const Mlp& f, std::span<const double> obs_t,
                              int action, std::span<const double> obs_next, GradBuffer& f_grads,
                              double coeff = 1.0);

// Stable log-softmax helpers shared with the policy loss.
Vec softmax(std::span<const double> logits);
double log_softmax_at(std::span<const double> logits, int index);

}  // namespace ellab
