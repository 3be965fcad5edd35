#include "ellab/bonus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ellab {

namespace {

template <typename T>
void append_raw(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

constexpr std::uint64_t kEncoderStream = 0x454E43ull;
constexpr std::uint64_t kRndStream = 0x524E44ull;
constexpr std::uint64_t kFwdStream = 0x464D44ull;

}  // namespace

std::string extract_key(const Observation& obs, KeyExtractor extractor) {
    std::string key;
    switch (extractor) {
        case KeyExtractor::Position:
            key.reserve(8);
            append_raw(key, static_cast<std::int32_t>(obs.x));
            append_raw(key, static_cast<std::int32_t>(obs.y));
            return key;
        case KeyExtractor::Message:
            append_raw(key, static_cast<std::int32_t>(obs.message));
            return key;
        case KeyExtractor::Identity: break;
    }
    key.reserve(obs.grid.size() + 32 + obs.noise.size() * 8);
    append_raw(key, static_cast<std::uint32_t>(obs.side));
    for (Cell c : obs.grid) key.push_back(static_cast<char>(c));
    append_raw(key, static_cast<std::int32_t>(obs.x));
    append_raw(key, static_cast<std::int32_t>(obs.y));
    if (obs.time_channel) append_raw(key, static_cast<std::int32_t>(obs.t));
    append_raw(key, static_cast<std::int32_t>(obs.message));
    for (double n : obs.noise) append_raw(key, n);
    return key;
}

double count_bonus(EpisodicCountTable& table, const Observation& obs, CountForm form) {
    const long n = table.visit(extract_key(obs, table.extractor));
    if (form == CountForm::FirstVisit) return n == 1 ? 1.0 : 0.0;
    return 1.0 / std::sqrt(static_cast<double>(n));
}

RndPair make_rnd_pair(int input_dim, const std::vector<int>& hidden, int out_dim,
                      std::uint64_t seed) {
    RndPair pair;
    Rng target_rng = Rng(seed).derive(1);
    Rng pred_rng = Rng(seed).derive(2);
    pair.target = make_mlp(input_dim, hidden, out_dim, target_rng);
    pair.predictor = make_mlp(input_dim, hidden, out_dim, pred_rng);
    pair.opt = make_rmsprop_state(pair.predictor);
    return pair;
}

double rnd_bonus(RndPair& pair, std::span<const double> x) {
    const Vec t = mlp_forward(pair.target, x);
    const Vec p = mlp_forward(pair.predictor, x);
    double err = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = t[i] - p[i];
        err += d * d;
    }
    if (!std::isfinite(err)) throw std::runtime_error("rnd_bonus: non-finite prediction error");
    pair.pending.emplace_back(x.begin(), x.end());
    return err;
}

double rnd_train_step(RndPair& pair, double lr, double smoothing, double eps,
                      double max_grad_norm) {
    if (pair.pending.empty()) return 0.0;
    GradBuffer grads = zeros_like(pair.predictor);
    double total = 0.0;
    for (const Vec& x : pair.pending) {
        const Vec t = mlp_forward(pair.target, x);
        ForwardCache cache;
        const Vec p = mlp_forward(pair.predictor, x, &cache);
        Vec dp(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = p[i] - t[i];
            total += d * d;
            dp[i] = 2.0 * d;
        }
        mlp_backward(pair.predictor, cache, dp, grads);
    }
    clip_global_norm({&grads}, max_grad_norm);
    rmsprop_step(pair.predictor, grads, pair.opt, lr, smoothing, eps);
    const double mean = total / static_cast<double>(pair.pending.size());
    pair.pending.clear();
    return mean;
}

double noveld_bonus(RndPair& pair, EpisodicCountTable& table, const Observation& obs_t,
                    const Observation& obs_next, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("noveld_bonus: alpha must be >= 0");
    const double b_prev = rnd_bonus(pair, obs_t.flat());
    pair.pending.pop_back();  // only s_next feeds the predictor queue
    const double b_next = rnd_bonus(pair, obs_next.flat());
    const double gate = count_bonus(table, obs_next, CountForm::FirstVisit);
    return std::max(0.0, b_next - alpha * b_prev) * gate;
}

double ride_bonus(const Encoder& encoder, EpisodicCountTable& table, const Observation& obs_t,
                  const Observation& obs_next) {
    const Vec a = encoder.encode(obs_t.flat());
    const Vec b = encoder.encode(obs_next.flat());
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = b[i] - a[i];
        sq += d * d;
    }
    const long n = table.visit(extract_key(obs_next, table.extractor));
    return std::sqrt(sq) / std::sqrt(static_cast<double>(n));
}

double icm_bonus(const Encoder& encoder, const Mlp& f, const Observation& obs_t, int action,
                 const Observation& obs_next) {
    const Vec phi_t = encoder.encode(obs_t.flat());
    const Vec phi_next = encoder.encode(obs_next.flat());
    const int n = static_cast<int>(phi_t.size());
    Vec joint(f.in_dim(), 0.0);
    std::copy(phi_t.begin(), phi_t.end(), joint.begin());
    joint[n + action] = 1.0;
    const Vec pred = mlp_forward(f, joint);
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = pred[i] - phi_next[i];
        sq += d * d;
    }
    return 0.5 * sq;
}

double e3b_step_bonus(EllipticalTracker& tracker, const Encoder& encoder,
                      const Observation& obs_next) {
    return tracker.observe(encoder.encode(obs_next.flat()));
}

const char* to_string(BonusAlgo a) {
    switch (a) {
        case BonusAlgo::None: return "none";
        case BonusAlgo::E3b: return "e3b";
        case BonusAlgo::NovelD: return "noveld";
        case BonusAlgo::Ride: return "ride";
        case BonusAlgo::Icm: return "icm";
        case BonusAlgo::Rnd: return "rnd";
        case BonusAlgo::Count: return "count";
    }
    return "none";
}

const char* to_string(KeyExtractor e) {
    switch (e) {
        case KeyExtractor::Identity: return "identity";
        case KeyExtractor::Position: return "position";
        case KeyExtractor::Message: return "message";
    }
    return "identity";
}

BonusAlgo bonus_algo_from(const std::string& s) {
    if (s == "none") return BonusAlgo::None;
    if (s == "e3b") return BonusAlgo::E3b;
    if (s == "noveld") return BonusAlgo::NovelD;
    if (s == "ride") return BonusAlgo::Ride;
    if (s == "icm") return BonusAlgo::Icm;
    if (s == "rnd") return BonusAlgo::Rnd;
    if (s == "count") return BonusAlgo::Count;
    throw std::invalid_argument("unknown bonus algo '" + s + "'");
}

KeyExtractor key_extractor_from(const std::string& s) {
    if (s == "identity") return KeyExtractor::Identity;
    if (s == "position") return KeyExtractor::Position;
    if (s == "message") return KeyExtractor::Message;
    throw std::invalid_argument("unknown key extractor '" + s + "'");
}

BonusEngine::BonusEngine(const BonusConfig& cfg, const EncoderSpec& encoder_spec, int num_envs,
                         int num_actions, bool episodic, std::uint64_t seed,
                         const Mlp* policy_trunk)
    : cfg_(cfg), episodic_(episodic) {
    if (num_envs < 1) throw std::invalid_argument("BonusEngine: need at least one env lane");
    episode_ids_.assign(num_envs, 0);

    const bool needs_encoder =
        cfg.algo == BonusAlgo::E3b || cfg.algo == BonusAlgo::Ride || cfg.algo == BonusAlgo::Icm;
    if (needs_encoder) {
        if (encoder_spec.kind == EncoderKind::PolicyTrunk) {
            encoder_ = std::make_unique<Encoder>(Encoder::policy_tie(policy_trunk));
        } else if (encoder_spec.kind == EncoderKind::OneHot) {
            const int plane = encoder_spec.key_space;
            const int offset = encoder_spec.input_dim;  // position plane offset in flat obs
            encoder_ = std::make_unique<Encoder>(
                Encoder::one_hot(plane, [offset, plane](std::span<const double> obs) {
                    for (int i = 0; i < plane; ++i)
                        if (obs[offset + i] > 0.5) return i;
                    return 0;
                }));
        } else {
            encoder_ = std::make_unique<Encoder>(
                Encoder::build(encoder_spec, Rng(seed).derive(kEncoderStream).next_u64()));
        }
        if (encoder_->trainable()) {
            phi_opt_ = std::make_unique<RmsPropState>(make_rmsprop_state(encoder_->phi()));
            g_opt_ = std::make_unique<RmsPropState>(make_rmsprop_state(encoder_->idm_head()));
        }
    }
    if (cfg.algo == BonusAlgo::Icm) {
        Rng frng = Rng(seed).derive(kFwdStream);
        const int n = encoder_->out_dim();
        forward_model_ = std::make_unique<Mlp>(
            make_mlp(n + num_actions, {encoder_spec.idm_hidden}, n, frng));
        f_opt_ = std::make_unique<RmsPropState>(make_rmsprop_state(*forward_model_));
    }
    if (cfg.algo == BonusAlgo::NovelD || cfg.algo == BonusAlgo::Rnd) {
        rnd_ = std::make_unique<RndPair>(make_rnd_pair(
            encoder_spec.input_dim, encoder_spec.hidden, encoder_spec.feature_dim,
            Rng(seed).derive(kRndStream).next_u64()));
    }
    if (cfg.algo == BonusAlgo::E3b) {
        if (!(cfg.ridge > 0.0)) throw std::invalid_argument("BonusEngine: e3b needs ridge > 0");
        trackers_.reserve(num_envs);
        for (int e = 0; e < num_envs; ++e)
            trackers_.emplace_back(encoder_->out_dim(), cfg.ridge);
    }
    if (cfg.algo == BonusAlgo::NovelD || cfg.algo == BonusAlgo::Ride ||
        cfg.algo == BonusAlgo::Count) {
        tables_.resize(num_envs);
        for (auto& t : tables_) t.extractor = cfg.extractor;
    }
}

void BonusEngine::set_optim(double lr, double smoothing, double eps, double max_grad_norm) {
    lr_ = lr;
    smoothing_ = smoothing;
    eps_ = eps;
    max_grad_norm_ = max_grad_norm;
}

void BonusEngine::episode_start(int env) {
    ++episode_ids_.at(env);
    if (!episodic_) return;
    if (!trackers_.empty()) trackers_.at(env).reset();
    if (!tables_.empty()) tables_.at(env).clear();
}

double BonusEngine::step(int env, const Observation& prev, int action, const Observation& next) {
    double bonus = 0.0;
    BonusTrace trace;
    const bool tracing = trace_ != nullptr;
    switch (cfg_.algo) {
        case BonusAlgo::None: return 0.0;
        case BonusAlgo::E3b: {
            Vec phi = encoder_->encode(next.flat());
            bonus = trackers_.at(env).observe(phi);
            if (tracing) trace.phi = std::move(phi);
            break;
        }
        case BonusAlgo::Count: {
            if (tracing) trace.key = extract_key(next, cfg_.extractor);
            bonus = count_bonus(tables_.at(env), next, cfg_.count_form);
            break;
        }
        case BonusAlgo::NovelD: {
            const double b_prev = rnd_bonus(*rnd_, prev.flat());
            rnd_->pending.pop_back();
            const double b_next = rnd_bonus(*rnd_, next.flat());
            const double gate = count_bonus(tables_.at(env), next, CountForm::FirstVisit);
            bonus = std::max(0.0, b_next - cfg_.alpha * b_prev) * gate;
            if (tracing) {
                trace.b_prev = b_prev;
                trace.b_next = b_next;
                trace.key = extract_key(next, cfg_.extractor);
            }
            break;
        }
        case BonusAlgo::Ride: {
            const Vec a = encoder_->encode(prev.flat());
            Vec b = encoder_->encode(next.flat());
            double sq = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = b[i] - a[i];
                sq += d * d;
            }
            const long n = tables_.at(env).visit(extract_key(next, cfg_.extractor));
            bonus = std::sqrt(sq) / std::sqrt(static_cast<double>(n));
            if (tracing) {
                trace.phi_prev = a;
                trace.phi = std::move(b);
                trace.key = extract_key(next, cfg_.extractor);
            }
            break;
        }
        case BonusAlgo::Icm: {
            const Vec phi_t = encoder_->encode(prev.flat());
            Vec target = encoder_->encode(next.flat());
            const int n = static_cast<int>(phi_t.size());
            Vec joint(forward_model_->in_dim(), 0.0);
            std::copy(phi_t.begin(), phi_t.end(), joint.begin());
            joint[n + action] = 1.0;
            Vec pred = mlp_forward(*forward_model_, joint);
            double sq = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d = pred[i] - target[i];
                sq += d * d;
            }
            bonus = 0.5 * sq;
            if (tracing) {
                trace.pred = std::move(pred);
                trace.target = std::move(target);
            }
            break;
        }
        case BonusAlgo::Rnd: {
            Vec x = next.flat();
            Vec t = mlp_forward(rnd_->target, x);
            Vec p = mlp_forward(rnd_->predictor, x);
            double err = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                const double d = t[i] - p[i];
                err += d * d;
            }
            rnd_->pending.push_back(std::move(x));
            bonus = err;
            if (tracing) {
                trace.pred = std::move(p);
                trace.target = std::move(t);
            }
            break;
        }
    }
    if (!std::isfinite(bonus)) throw std::runtime_error("BonusEngine: non-finite bonus");
    if (tracing) {
        trace.env = env;
        trace.episode = episode_ids_.at(env);
        trace.bonus = bonus;
        trace_->push_back(std::move(trace));
    }
    return bonus;
}

double BonusEngine::learner_update(std::span<const TransitionView> transitions) {
    switch (cfg_.algo) {
        case BonusAlgo::None:
        case BonusAlgo::Count:
            return 0.0;
        case BonusAlgo::NovelD:
        case BonusAlgo::Rnd:
            return rnd_train_step(*rnd_, lr_, smoothing_, eps_, max_grad_norm_);
        default: break;
    }
    if (!encoder_ || !encoder_->trainable() || transitions.empty()) return 0.0;

    // inverse-dynamics loss trains phi and g; the ICM forward loss trains f
    // only (coefficients 1.0 forward / 0.1 inverse when both are present)
    const bool with_forward = cfg_.algo == BonusAlgo::Icm && forward_model_ != nullptr;
    const double idm_coeff = with_forward ? 0.1 : 1.0;

    GradBuffer phi_grads = zeros_like(encoder_->phi());
    GradBuffer g_grads = zeros_like(encoder_->idm_head());
    GradBuffer f_grads;
    if (with_forward) f_grads = zeros_like(*forward_model_);

    double idm_total = 0.0;
    for (const TransitionView& tr : transitions) {
        idm_total += idm_loss_acc(encoder_->phi(), encoder_->idm_head(), tr.obs, tr.action,
                                  tr.next_obs, phi_grads, g_grads, idm_coeff);
        if (with_forward) {
            forward_model_loss_acc(encoder_->phi(), *forward_model_, tr.obs, tr.action,
                                   tr.next_obs, f_grads, 1.0);
        }
    }

    std::vector<GradBuffer*> groups{&phi_grads, &g_grads};
    if (with_forward) groups.push_back(&f_grads);
    clip_global_norm(groups, max_grad_norm_);
    rmsprop_step(encoder_->phi(), phi_grads, *phi_opt_, lr_, smoothing_, eps_);
    rmsprop_step(encoder_->idm_head(), g_grads, *g_opt_, lr_, smoothing_, eps_);
    if (with_forward) rmsprop_step(*forward_model_, f_grads, *f_opt_, lr_, smoothing_, eps_);
    return idm_total / static_cast<double>(transitions.size());
}

}  // namespace ellab
