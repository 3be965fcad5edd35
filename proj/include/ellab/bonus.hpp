#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ellab/elliptical.hpp"
#include "ellab/encoders.hpp"
#include "ellab/gridworld.hpp"

namespace ellab {

enum class KeyExtractor { Identity, Position, Message };

// Canonical byte key for the selected observation channels, fixed-width
// little-endian so counts hash identically across runs. The identity key
// covers the whole observation as exposed (grid, position, the time counter
// when that channel is on, message, noise).
std::string extract_key(const Observation& obs, KeyExtractor extractor);

struct EpisodicCountTable {
    KeyExtractor extractor = KeyExtractor::Identity;
    std::unordered_map<std::string, long> counts;

    void clear() { counts.clear(); }
    long visit(const std::string& key) { return ++counts[key]; }
    long peek(const std::string& key) const {
        const auto it = counts.find(key);
        return it == counts.end() ? 0 : it->second;
    }
};

enum class CountForm { InverseSqrt, FirstVisit };

// Counts the observation (increment-then-read, so a first visit sees N=1),
// then returns 1/sqrt(N) or the first-visit indicator.
double count_bonus(EpisodicCountTable& table, const Observation& obs, CountForm form);

// Frozen random target plus a trained predictor; the squared prediction
// error is the novelty signal.
struct RndPair {
    Mlp target;
    Mlp predictor;
    RmsPropState opt;
    std::vector<Vec> pending;  // inputs queued for the next regression step
};

RndPair make_rnd_pair(int input_dim, const std::vector<int>& hidden, int out_dim,
                      std::uint64_t seed);

// ||target(x) - predictor(x)||^2; queues x for the next predictor update.
double rnd_bonus(RndPair& pair, std::span<const double> x);

// One regression step over the queued inputs (summed loss, clipped at
// max_grad_norm); clears the queue. Returns the mean per-sample loss.
double rnd_train_step(RndPair& pair, double lr, double smoothing, double eps,
                      double max_grad_norm);

// [ b_rnd(s_next) - alpha * b_rnd(s_t) ]_+ gated by the first-visit
// indicator of s_next under the table's extractor.
double noveld_bonus(RndPair& pair, EpisodicCountTable& table, const Observation& obs_t,
                    const Observation& obs_next, double alpha);

// || phi(s_next) - phi(s_t) ||_2 * 1/sqrt(N_e(s_next))
double ride_bonus(const Encoder& encoder, EpisodicCountTable& table, const Observation& obs_t,
                  const Observation& obs_next);

// Forward-model prediction error 0.5*||f(phi(s_t), a) - phi(s_next)||^2.
double icm_bonus(const Encoder& encoder, const Mlp& f, const Observation& obs_t, int action,
                 const Observation& obs_next);

// Bonus with the pre-update tracker, then absorb phi(s_next) -- strictly
// this order.
double e3b_step_bonus(EllipticalTracker& tracker, const Encoder& encoder,
                      const Observation& obs_next);

enum class BonusAlgo { None, E3b, NovelD, Ride, Icm, Rnd, Count };

const char* to_string(BonusAlgo a);
const char* to_string(KeyExtractor e);
BonusAlgo bonus_algo_from(const std::string& s);
KeyExtractor key_extractor_from(const std::string& s);

struct BonusConfig {
    BonusAlgo algo = BonusAlgo::None;
    KeyExtractor extractor = KeyExtractor::Identity;
    CountForm count_form = CountForm::InverseSqrt;
    double alpha = 0.1;   // NovelD scaling
    double beta = 1.0;    // intrinsic coefficient, applied by the reward mixer
    double ridge = 0.1;   // E3B
    bool normalize = true;
};

// Everything the bonus side needs per transition, kept free of trainer types.
struct TransitionView {
    std::span<const double> obs;
    int action = 0;
    std::span<const double> next_obs;
};

// Per-step payload sufficient to re-derive the bonus offline.
struct BonusTrace {
    int env = 0;
    long episode = 0;
    double bonus = 0.0;
    Vec phi;        // e3b / ride (phi of s_next)
    Vec phi_prev;   // ride
    std::string key;  // count-keyed algos, raw bytes
    double b_next = 0.0, b_prev = 0.0;  // noveld RND values
    Vec pred, target;  // icm / rnd network outputs
};

// One uniform per-step interface over all bonuses. Owns the shared models
// (encoder, RND pair, forward model) and one tracker/count table per actor
// lane. Bonus computation never mutates model parameters; training happens
// only in learner_update.
class BonusEngine {
public:
    BonusEngine(const BonusConfig& cfg, const EncoderSpec& encoder_spec, int num_envs,
                int num_actions, bool episodic, std::uint64_t seed,
                const Mlp* policy_trunk = nullptr);

    // Resets the lane's episodic state (tracker / count table) when in
    // episodic mode; call at every episode start.
    void episode_start(int env);

    double step(int env, const Observation& prev, int action, const Observation& next);

    // One model update on the rollout's transitions: inverse-dynamics (and
    // forward model for ICM) or RND predictor regression. Returns the mean
    // per-sample model loss, 0 when there is nothing to train.
    double learner_update(std::span<const TransitionView> transitions);

    const BonusConfig& config() const { return cfg_; }
    bool has_encoder() const { return encoder_ != nullptr; }
    const Encoder& encoder() const { return *encoder_; }
    Encoder& encoder() { return *encoder_; }
    const EllipticalTracker& tracker(int env) const { return trackers_.at(env); }
    long episode_index(int env) const { return episode_ids_.at(env); }

    void set_trace_sink(std::vector<BonusTrace>* sink) { trace_ = sink; }

private:
    BonusConfig cfg_;
    bool episodic_ = true;
    double lr_ = 1e-4, smoothing_ = 0.99, eps_ = 1e-5, max_grad_norm_ = 40.0;
    std::unique_ptr<Encoder> encoder_;
    std::unique_ptr<RndPair> rnd_;
    std::unique_ptr<Mlp> forward_model_;
    std::unique_ptr<RmsPropState> phi_opt_, g_opt_, f_opt_;
    std::vector<EllipticalTracker> trackers_;
    std::vector<EpisodicCountTable> tables_;
    std::vector<long> episode_ids_;
    std::vector<BonusTrace>* trace_ = nullptr;

    friend class Trainer;
    void set_optim(double lr, double smoothing, double eps, double max_grad_norm);
};

}  // namespace ellab
