#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "ellab/bonus.hpp"
#include "ellab/gridworld.hpp"
#include "ellab/records.hpp"

namespace ellab {

struct PolicyParams {
    Mlp trunk;        // observation -> hidden representation (relu output)
    Mlp action_head;  // hidden -> action logits
    Mlp value_head;   // hidden -> scalar value

    bool operator==(const PolicyParams&) const = default;
};

PolicyParams make_policy(int obs_dim, int hidden, int num_actions, Rng& rng);

struct StepRecord {
    Vec obs;       // flattened s_t
    Vec next_obs;  // flattened s_{t+1}
    int env = 0;
    int action = 0;
    double logprob = 0.0;
    double value = 0.0;
    double extrinsic = 0.0;
    double bonus = 0.0;
    bool done = false;
    double mixed = 0.0;  // r + beta * (normalized) bonus
    double ret = 0.0;    // discounted return, bootstrapped at the unroll edge
    double adv = 0.0;    // ret - value

    bool operator==(const StepRecord&) const = default;
};

struct Rollout {
    int num_envs = 0;
    int unroll = 0;
    std::vector<StepRecord> steps;  // time-major: steps[t*num_envs + e]
    Vec bootstrap_values;           // V(s_T) per env lane

    bool operator==(const Rollout&) const = default;
};

// Streaming mean/variance of the intrinsic rewards; the reported deviation
// is floored so normalization can never divide by ~0.
struct RunningNormalizer {
    long count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    double floor_eps = 1e-8;

    void push(double x) {
        ++count;
        const double d = x - mean;
        mean += d / count;
        m2 += d * (x - mean);
    }
    double std() const;
};

struct TrainConfig {
    std::string env_spec = "multiroom-r3-s13-timer";
    BonusConfig bonus;
    EncoderKind encoder = EncoderKind::InverseDynamics;
    int feature_dim = 64;
    std::vector<int> encoder_hidden = {64, 64};
    int idm_hidden = 256;
    int policy_hidden = 64;
    double gamma = 0.99;
    double lr = 1e-4;
    double model_lr = 0.0;  // encoder/RND/forward-model optimizer; 0 = use lr
    double entropy_cost = 0.0005;
    double baseline_cost = 0.5;
    double max_grad_norm = 40.0;
    double rms_smoothing = 0.99;
    double rms_eps = 1e-5;
    int unroll = 32;
    int num_envs = 8;
    long total_steps = 0;
    long log_interval = 2048;
    bool episodic = true;   // reset tracker/count state at episode boundaries
    int encoder_update_period = 1;
    std::uint64_t seed = 1;
    int episode_cap = 0;   // 0: env default
    long context_pool = 0; // 0: fresh context every episode, else seeds drawn from [0, pool)
    bool timing = true;    // false reports steps_per_second = 0 for byte-stable logs
    bool trace = false;    // keep per-step bonus traces for offline replay
};

// Per-algorithm defaults: gamma/lr/clipping shared, entropy and intrinsic
// scale / normalization per algorithm.
TrainConfig default_train_config(BonusAlgo algo);

// r_bar = r + beta * b, with b divided by the running deviation (after
// feeding this rollout's raw bonuses) when normalize is set.
void mix_rewards(Rollout& rollout, double beta, RunningNormalizer& normalizer, bool normalize);

// G_t = r_bar_t + gamma * G_{t+1} inside an episode segment, bootstrapped
// from the lane's value estimate at the unroll edge; A_t = G_t - V_t.
void compute_returns_and_advantages(Rollout& rollout, double gamma);

struct PolicyGrads {
    GradBuffer trunk, action, value;
};

struct PolicyOptState {
    RmsPropState trunk, action, value;
};

struct A2cDiag {
    double loss = 0.0;         // summed objective, the quantity differentiated
    double policy_loss = 0.0;  // per-step means for logging
    double value_loss = 0.0;
    double entropy = 0.0;
    double grad_norm = 0.0;    // pre-clip global norm
};

// loss = -sum A_t log pi(a_t|s_t) + baseline_cost * sum (G_t - V_t)^2
//        - entropy_cost * sum H(pi(.|s_t)),
// with G_t and A_t treated as constants. Gradients are accumulated into
// `grads` (zeroed first).
A2cDiag a2c_loss_and_grad(const PolicyParams& policy, const Rollout& rollout,
                          const TrainConfig& cfg, PolicyGrads& grads);

// Gradient step: global-norm clip then one RMSProp update per parameter set.
A2cDiag a2c_update(PolicyParams& policy, PolicyOptState& opt, const Rollout& rollout,
                   const TrainConfig& cfg);

// Synchronous advantage actor-critic over parallel env lanes with one bonus
// engine: collect, mix, update policy, update encoder/bonus models, repeat.
// Fully deterministic for a fixed config and seed.
class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg);

    Rollout collect_rollout();
    void mix_rewards(Rollout& rollout);
    A2cDiag a2c_update(const Rollout& rollout);
    double model_update(const Rollout& rollout);

    RunRecord train();

    const TrainConfig& config() const { return cfg_; }
    const PolicyParams& policy() const { return policy_; }
    BonusEngine& bonus_engine() { return *engine_; }
    const BonusEngine& bonus_engine() const { return *engine_; }
    int obs_dim() const { return obs_dim_; }
    long steps_done() const { return steps_done_; }
    const std::vector<BonusTrace>& trace_buffer() const { return trace_; }
    TraceHeader trace_header() const;

private:
    struct Lane {
        std::unique_ptr<GridEnv> env;
        Observation obs;
        Vec flat;
        Rng ctx_rng{0};
        double episode_return = 0.0;
    };

    void start_episode(int lane_idx);
    Vec policy_logits_value(std::span<const double> obs, double* value) const;

    TrainConfig cfg_;
    EnvConfig env_cfg_;
    int obs_dim_ = 0;
    PolicyParams policy_;
    PolicyOptState policy_opt_;
    std::unique_ptr<BonusEngine> engine_;
    std::vector<Lane> lanes_;
    Rng action_rng_{0};
    RunningNormalizer normalizer_;
    std::deque<double> recent_returns_;  // last 100 completed episodes
    long steps_done_ = 0;
    long rollouts_done_ = 0;
    std::vector<BonusTrace> trace_;
};

// TrainConfig <-> flat key=value map used by config files and run records.
TrainConfig train_config_from(const ConfigMap& map);
ConfigMap to_config_map(const TrainConfig& cfg);

}  // namespace ellab
