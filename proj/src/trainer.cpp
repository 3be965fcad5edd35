#include "ellab/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ellab {

namespace {

constexpr std::uint64_t kPolicyStream = 0x504F4Cull;
constexpr std::uint64_t kActionStream = 0x414354ull;
constexpr std::uint64_t kContextStream = 0x435458ull;
constexpr std::uint64_t kNoiseStream = 0x4E5345ull;
constexpr std::uint64_t kBonusStream = 0x424E53ull;

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (...) {
        throw std::invalid_argument("config key '" + key + "': bad numeric value '" + v + "'");
    }
}

long parse_long(const std::string& v, const std::string& key) {
    long out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw std::invalid_argument("config key '" + key + "': bad integer value '" + v + "'");
    return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config key '" + key + "': bad boolean value '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(static_cast<int>(parse_long(tok, key)));
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
    return out;
}

}  // namespace

PolicyParams make_policy(int obs_dim, int hidden, int num_actions, Rng& rng) {
    PolicyParams p;
    p.trunk = make_mlp(obs_dim, {hidden}, hidden, rng);
    p.trunk.layers.back().act = Activation::Relu;  // trunk output is a hidden representation
    p.action_head = make_mlp(hidden, {}, num_actions, rng);
    p.value_head = make_mlp(hidden, {}, 1, rng);
    return p;
}

double RunningNormalizer::std() const {
    if (count < 1) return floor_eps;
    return std::max(std::sqrt(m2 / static_cast<double>(count)), floor_eps);
}

TrainConfig default_train_config(BonusAlgo algo) {
    TrainConfig cfg;
    cfg.bonus.algo = algo;
    switch (algo) {
        case BonusAlgo::E3b:
            cfg.entropy_cost = 0.005;
            cfg.bonus.beta = 1.0;
            cfg.bonus.ridge = 0.1;
            cfg.bonus.normalize = true;
            cfg.encoder = EncoderKind::InverseDynamics;
            break;
        case BonusAlgo::NovelD:
            cfg.entropy_cost = 0.005;
            cfg.bonus.beta = 1.0;
            cfg.bonus.alpha = 0.1;
            cfg.bonus.normalize = true;
            break;
        case BonusAlgo::Ride:
        case BonusAlgo::Icm:
            cfg.entropy_cost = 0.0005;
            cfg.bonus.beta = 0.1;
            cfg.bonus.normalize = false;
            cfg.encoder = EncoderKind::InverseDynamics;
            break;
        case BonusAlgo::Rnd:
        case BonusAlgo::Count:
            cfg.entropy_cost = 0.0005;
            cfg.bonus.beta = 0.1;
            cfg.bonus.normalize = false;
            break;
        case BonusAlgo::None:
            cfg.bonus.beta = 0.0;
            break;
    }
    return cfg;
}

void mix_rewards(Rollout& rollout, double beta, RunningNormalizer& normalizer, bool normalize) {
    if (normalize) {
        for (const StepRecord& s : rollout.steps) normalizer.push(s.bonus);
        const double sigma = normalizer.std();
        for (StepRecord& s : rollout.steps) s.mixed = s.extrinsic + beta * (s.bonus / sigma);
    } else {
        for (StepRecord& s : rollout.steps) s.mixed = s.extrinsic + beta * s.bonus;
    }
}

void compute_returns_and_advantages(Rollout& rollout, double gamma) {
    const int n = rollout.num_envs;
    for (int e = 0; e < n; ++e) {
        double g = rollout.bootstrap_values[e];
        for (int t = rollout.unroll - 1; t >= 0; --t) {
            StepRecord& s = rollout.steps[static_cast<std::size_t>(t) * n + e];
            if (s.done) g = 0.0;  // no bootstrap across episode boundaries
            g = s.mixed + gamma * g;
            s.ret = g;
            s.adv = g - s.value;
        }
    }
}

A2cDiag a2c_loss_and_grad(const PolicyParams& policy, const Rollout& rollout,
                          const TrainConfig& cfg, PolicyGrads& grads) {
    grads.trunk.zero();
    grads.action.zero();
    grads.value.zero();

    A2cDiag diag;
    ForwardCache trunk_cache, action_cache, value_cache;
    const int num_actions = policy.action_head.out_dim();
    Vec dlogits(num_actions);

    for (const StepRecord& s : rollout.steps) {
        const Vec hidden = mlp_forward(policy.trunk, s.obs, &trunk_cache);
        const Vec logits = mlp_forward(policy.action_head, hidden, &action_cache);
        const Vec value_out = mlp_forward(policy.value_head, hidden, &value_cache);
        const double v = value_out[0];

        const Vec probs = softmax(logits);
        const double logp = log_softmax_at(logits, s.action);
        double entropy = 0.0;
        for (int k = 0; k < num_actions; ++k) {
            if (probs[k] > 0.0) entropy -= probs[k] * std::log(probs[k]);
        }

        const double pg_term = -s.adv * logp;
        const double v_err = s.ret - v;
        diag.loss += pg_term + cfg.baseline_cost * v_err * v_err - cfg.entropy_cost * entropy;
        diag.policy_loss += pg_term;
        diag.value_loss += v_err * v_err;
        diag.entropy += entropy;

        // d/dlogits of the policy-gradient and entropy terms
        for (int k = 0; k < num_actions; ++k) {
            const double logpk = std::log(std::max(probs[k], 1e-300));
            dlogits[k] = -s.adv * ((k == s.action ? 1.0 : 0.0) - probs[k]) +
                         cfg.entropy_cost * probs[k] * (logpk + entropy);
        }
        const Vec dh_action = mlp_backward(policy.action_head, action_cache, dlogits, grads.action);
        const Vec dvalue{2.0 * cfg.baseline_cost * (v - s.ret)};
        const Vec dh_value = mlp_backward(policy.value_head, value_cache, dvalue, grads.value);

        Vec dh(hidden.size());
        for (std::size_t i = 0; i < dh.size(); ++i) dh[i] = dh_action[i] + dh_value[i];
        mlp_backward(policy.trunk, trunk_cache, dh, grads.trunk);
    }
    if (!std::isfinite(diag.loss))
        throw std::runtime_error("a2c_loss_and_grad: non-finite loss (policy=" +
                                 std::to_string(diag.policy_loss) +
                                 " value=" + std::to_string(diag.value_loss) + ")");

    const double inv = rollout.steps.empty() ? 0.0 : 1.0 / rollout.steps.size();
    diag.policy_loss *= inv;
    diag.value_loss *= inv;
    diag.entropy *= inv;
    return diag;
}

A2cDiag a2c_update(PolicyParams& policy, PolicyOptState& opt, const Rollout& rollout,
                   const TrainConfig& cfg) {
    PolicyGrads grads{zeros_like(policy.trunk), zeros_like(policy.action_head),
                      zeros_like(policy.value_head)};
    A2cDiag diag = a2c_loss_and_grad(policy, rollout, cfg, grads);
    diag.grad_norm = grad_global_norm({&grads.trunk, &grads.action, &grads.value});
    clip_global_norm({&grads.trunk, &grads.action, &grads.value}, cfg.max_grad_norm);
    rmsprop_step(policy.trunk, grads.trunk, opt.trunk, cfg.lr, cfg.rms_smoothing, cfg.rms_eps);
    rmsprop_step(policy.action_head, grads.action, opt.action, cfg.lr, cfg.rms_smoothing,
                 cfg.rms_eps);
    rmsprop_step(policy.value_head, grads.value, opt.value, cfg.lr, cfg.rms_smoothing,
                 cfg.rms_eps);
    return diag;
}

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg), env_cfg_(parse_env_spec(cfg.env_spec)) {
    if (cfg.num_envs < 1 || cfg.unroll < 1)
        throw std::invalid_argument("Trainer: num_envs and unroll must be >= 1");
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
        throw std::invalid_argument("Trainer: gamma must be in (0, 1)");
    if (cfg.episode_cap > 0) env_cfg_.episode_cap = cfg.episode_cap;

    obs_dim_ = Observation::flat_dim(env_cfg_);
    Rng root(cfg.seed);
    Rng policy_rng = root.derive(kPolicyStream);
    policy_ = make_policy(obs_dim_, cfg.policy_hidden, kNumActions, policy_rng);
    policy_opt_ = PolicyOptState{make_rmsprop_state(policy_.trunk),
                                 make_rmsprop_state(policy_.action_head),
                                 make_rmsprop_state(policy_.value_head)};

    EncoderSpec enc_spec;
    enc_spec.kind = cfg.encoder;
    enc_spec.input_dim = obs_dim_;
    enc_spec.feature_dim = cfg.feature_dim;
    enc_spec.hidden = cfg.encoder_hidden;
    enc_spec.idm_hidden = cfg.idm_hidden;
    enc_spec.num_actions = kNumActions;
    if (cfg.encoder == EncoderKind::OneHot) {
        enc_spec.key_space = env_cfg_.side * env_cfg_.side;
        enc_spec.input_dim = env_cfg_.side * env_cfg_.side * kNumCellTags;  // plane offset
    }
    engine_ = std::make_unique<BonusEngine>(cfg.bonus, enc_spec, cfg.num_envs, kNumActions,
                                            cfg.episodic, root.derive(kBonusStream).next_u64(),
                                            &policy_.trunk);
    engine_->set_optim(cfg.model_lr > 0.0 ? cfg.model_lr : cfg.lr, cfg.rms_smoothing,
                       cfg.rms_eps, cfg.max_grad_norm);
    if (cfg.trace) engine_->set_trace_sink(&trace_);

    action_rng_ = root.derive(kActionStream);
    lanes_.resize(cfg.num_envs);
    for (int e = 0; e < cfg.num_envs; ++e) {
        Lane& lane = lanes_[e];
        lane.env = std::make_unique<GridEnv>(
            env_cfg_, root.derive(kNoiseStream + static_cast<std::uint64_t>(e)).next_u64());
        lane.ctx_rng = root.derive(kContextStream + static_cast<std::uint64_t>(e));
        start_episode(e);
    }
}

void Trainer::start_episode(int lane_idx) {
    Lane& lane = lanes_[lane_idx];
    const std::uint64_t ctx_seed = cfg_.context_pool > 0
                                       ? lane.ctx_rng.below(static_cast<std::uint64_t>(cfg_.context_pool))
                                       : lane.ctx_rng.next_u64();
    lane.obs = lane.env->reset(Context{ctx_seed, env_cfg_.task});
    lane.flat = lane.obs.flat();
    lane.episode_return = 0.0;
    engine_->episode_start(lane_idx);
}

Vec Trainer::policy_logits_value(std::span<const double> obs, double* value) const {
    const Vec hidden = mlp_forward(policy_.trunk, obs);
    if (value) *value = mlp_forward(policy_.value_head, hidden)[0];
    return mlp_forward(policy_.action_head, hidden);
}

Rollout Trainer::collect_rollout() {
    Rollout out;
    out.num_envs = cfg_.num_envs;
    out.unroll = cfg_.unroll;
    out.steps.reserve(static_cast<std::size_t>(cfg_.num_envs) * cfg_.unroll);

    for (int t = 0; t < cfg_.unroll; ++t) {
        for (int e = 0; e < cfg_.num_envs; ++e) {
            Lane& lane = lanes_[e];
            StepRecord rec;
            rec.env = e;
            rec.obs = lane.flat;

            double value = 0.0;
            const Vec logits = policy_logits_value(rec.obs, &value);
            const Vec probs = softmax(logits);
            const double u = action_rng_.uniform01();
            int action = kNumActions - 1;
            double acc = 0.0;
            for (int k = 0; k < kNumActions; ++k) {
                acc += probs[k];
                if (u < acc) {
                    action = k;
                    break;
                }
            }
            rec.action = action;
            rec.logprob = log_softmax_at(logits, action);
            rec.value = value;

            GridEnv::StepResult sr = lane.env->step(static_cast<Action>(action));
            rec.extrinsic = sr.reward;
            rec.done = sr.done;
            rec.next_obs = sr.obs.flat();
            rec.bonus = engine_->step(e, lane.obs, action, sr.obs);
            lane.episode_return += sr.reward;

            if (sr.done) {
                recent_returns_.push_back(lane.episode_return);
                if (recent_returns_.size() > 100) recent_returns_.pop_front();
                start_episode(e);
            } else {
                lane.obs = std::move(sr.obs);
                lane.flat = rec.next_obs;
            }
            out.steps.push_back(std::move(rec));
        }
    }
    out.bootstrap_values.resize(cfg_.num_envs);
    for (int e = 0; e < cfg_.num_envs; ++e) {
        double v = 0.0;
        policy_logits_value(lanes_[e].flat, &v);
        out.bootstrap_values[e] = v;
    }
    return out;
}

void Trainer::mix_rewards(Rollout& rollout) {
    ellab::mix_rewards(rollout, cfg_.bonus.beta, normalizer_, cfg_.bonus.normalize);
}

A2cDiag Trainer::a2c_update(const Rollout& rollout) {
    return ellab::a2c_update(policy_, policy_opt_, rollout, cfg_);
}

double Trainer::model_update(const Rollout& rollout) {
    ++rollouts_done_;
    if (cfg_.encoder_update_period > 1 && (rollouts_done_ % cfg_.encoder_update_period) != 0)
        return 0.0;
    std::vector<TransitionView> views;
    views.reserve(rollout.steps.size());
    for (const StepRecord& s : rollout.steps)
        views.push_back(TransitionView{s.obs, s.action, s.next_obs});
    return engine_->learner_update(views);
}

TraceHeader Trainer::trace_header() const {
    TraceHeader h;
    h.algo = cfg_.bonus.algo;
    h.extractor = cfg_.bonus.extractor;
    h.count_form = cfg_.bonus.count_form;
    h.alpha = cfg_.bonus.alpha;
    h.ridge = cfg_.bonus.ridge;
    h.feature_dim = engine_->has_encoder() ? engine_->encoder().out_dim() : cfg_.feature_dim;
    h.num_envs = cfg_.num_envs;
    h.episodic = cfg_.episodic;
    return h;
}

RunRecord Trainer::train() {
    RunRecord rec;
    rec.seed = cfg_.seed;
    rec.config = to_config_map(cfg_);
    rec.fingerprint = config_fingerprint(rec.config);

    using clock = std::chrono::steady_clock;
    auto interval_start = clock::now();
    long interval_start_step = 0;
    long next_log = cfg_.log_interval;

    double bonus_sum = 0.0, bonus_sq = 0.0;
    long bonus_n = 0;
    double pl_sum = 0.0, vl_sum = 0.0, ent_sum = 0.0, idm_sum = 0.0;
    long diag_n = 0;

    try {
        while (steps_done_ < cfg_.total_steps) {
            Rollout ro = collect_rollout();
            mix_rewards(ro);
            compute_returns_and_advantages(ro, cfg_.gamma);
            const A2cDiag diag = a2c_update(ro);
            const double idm = model_update(ro);
            steps_done_ += static_cast<long>(ro.steps.size());

            for (const StepRecord& s : ro.steps) {
                bonus_sum += s.bonus;
                bonus_sq += s.bonus * s.bonus;
            }
            bonus_n += static_cast<long>(ro.steps.size());
            pl_sum += diag.policy_loss;
            vl_sum += diag.value_loss;
            ent_sum += diag.entropy;
            idm_sum += idm;
            ++diag_n;

            if (steps_done_ >= next_log) {
                MetricRow row;
                row.step = steps_done_;
                if (!recent_returns_.empty()) {
                    double s = 0.0;
                    for (double r : recent_returns_) s += r;
                    row.episode_return_mean = s / static_cast<double>(recent_returns_.size());
                }
                if (bonus_n > 0) {
                    row.intrinsic_mean = bonus_sum / static_cast<double>(bonus_n);
                    const double var =
                        std::max(0.0, bonus_sq / static_cast<double>(bonus_n) -
                                          row.intrinsic_mean * row.intrinsic_mean);
                    row.intrinsic_std = std::sqrt(var);
                }
                if (diag_n > 0) {
                    row.policy_loss = pl_sum / diag_n;
                    row.value_loss = vl_sum / diag_n;
                    row.entropy = ent_sum / diag_n;
                    row.idm_loss = idm_sum / diag_n;
                }
                if (cfg_.timing) {
                    const double secs =
                        std::chrono::duration<double>(clock::now() - interval_start).count();
                    if (secs > 0.0)
                        row.steps_per_second = static_cast<double>(steps_done_ - interval_start_step) / secs;
                }
                rec.metrics.push_back(row);
                interval_start = clock::now();
                interval_start_step = steps_done_;
                next_log = (steps_done_ / cfg_.log_interval + 1) * cfg_.log_interval;
                bonus_sum = bonus_sq = 0.0;
                bonus_n = 0;
                pl_sum = vl_sum = ent_sum = idm_sum = 0.0;
                diag_n = 0;
            }
        }
        rec.status = "completed";
    } catch (const std::exception& e) {
        rec.status = "failed";
        rec.error = e.what();
    }
    return rec;
}

TrainConfig train_config_from(const ConfigMap& map) {
    TrainConfig cfg;
    if (const auto it = map.find("algo"); it != map.end())
        cfg = default_train_config(bonus_algo_from(it->second));
    for (const auto& [key, value] : map) {
        if (key == "algo") {
            // applied first, above
        } else if (key == "env") {
            parse_env_spec(value);  // validate early
            cfg.env_spec = value;
        } else if (key == "extractor") {
            cfg.bonus.extractor = key_extractor_from(value);
        } else if (key == "count_form") {
            if (value == "first_visit") cfg.bonus.count_form = CountForm::FirstVisit;
            else if (value == "inverse_sqrt") cfg.bonus.count_form = CountForm::InverseSqrt;
            else throw std::invalid_argument("config key 'count_form': unknown value '" + value + "'");
        } else if (key == "encoder") {
            if (value == "one_hot") cfg.encoder = EncoderKind::OneHot;
            else if (value == "random_net") cfg.encoder = EncoderKind::RandomNet;
            else if (value == "policy_trunk") cfg.encoder = EncoderKind::PolicyTrunk;
            else if (value == "inverse_dynamics") cfg.encoder = EncoderKind::InverseDynamics;
            else throw std::invalid_argument("config key 'encoder': unknown value '" + value + "'");
        } else if (key == "feature_dim") {
            cfg.feature_dim = static_cast<int>(parse_long(value, key));
        } else if (key == "encoder_hidden") {
            cfg.encoder_hidden = parse_int_list(value, key);
        } else if (key == "idm_hidden") {
            cfg.idm_hidden = static_cast<int>(parse_long(value, key));
        } else if (key == "policy_hidden") {
            cfg.policy_hidden = static_cast<int>(parse_long(value, key));
        } else if (key == "alpha") {
            cfg.bonus.alpha = parse_double(value, key);
        } else if (key == "beta") {
            cfg.bonus.beta = parse_double(value, key);
        } else if (key == "lambda") {
            cfg.bonus.ridge = parse_double(value, key);
        } else if (key == "normalize_intrinsic") {
            cfg.bonus.normalize = parse_bool(value, key);
        } else if (key == "gamma") {
            cfg.gamma = parse_double(value, key);
        } else if (key == "lr") {
            cfg.lr = parse_double(value, key);
        } else if (key == "model_lr") {
            cfg.model_lr = parse_double(value, key);
        } else if (key == "entropy_cost") {
            cfg.entropy_cost = parse_double(value, key);
        } else if (key == "baseline_cost") {
            cfg.baseline_cost = parse_double(value, key);
        } else if (key == "max_grad_norm") {
            cfg.max_grad_norm = parse_double(value, key);
        } else if (key == "rms_smoothing") {
            cfg.rms_smoothing = parse_double(value, key);
        } else if (key == "rms_eps") {
            cfg.rms_eps = parse_double(value, key);
        } else if (key == "unroll") {
            cfg.unroll = static_cast<int>(parse_long(value, key));
        } else if (key == "num_envs") {
            cfg.num_envs = static_cast<int>(parse_long(value, key));
        } else if (key == "total_steps") {
            cfg.total_steps = parse_long(value, key);
        } else if (key == "log_interval") {
            cfg.log_interval = parse_long(value, key);
        } else if (key == "episodic") {
            cfg.episodic = parse_bool(value, key);
        } else if (key == "encoder_update_period") {
            cfg.encoder_update_period = static_cast<int>(parse_long(value, key));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
        } else if (key == "seeds") {
            parse_long(value, key);  // consumed by the CLI; validated here
        } else if (key == "episode_cap") {
            cfg.episode_cap = static_cast<int>(parse_long(value, key));
        } else if (key == "context_pool") {
            cfg.context_pool = parse_long(value, key);
        } else if (key == "timing") {
            cfg.timing = parse_bool(value, key);
        } else if (key == "trace") {
            cfg.trace = parse_bool(value, key);
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

ConfigMap to_config_map(const TrainConfig& cfg) {
    ConfigMap m;
    auto fmt = [](double v) {
        std::ostringstream ss;
        ss << v;
        return ss.str();
    };
    m["env"] = cfg.env_spec;
    m["algo"] = to_string(cfg.bonus.algo);
    m["extractor"] = to_string(cfg.bonus.extractor);
    m["count_form"] =
        cfg.bonus.count_form == CountForm::FirstVisit ? "first_visit" : "inverse_sqrt";
    switch (cfg.encoder) {
        case EncoderKind::OneHot: m["encoder"] = "one_hot"; break;
        case EncoderKind::RandomNet: m["encoder"] = "random_net"; break;
        case EncoderKind::PolicyTrunk: m["encoder"] = "policy_trunk"; break;
        case EncoderKind::InverseDynamics: m["encoder"] = "inverse_dynamics"; break;
    }
    m["feature_dim"] = std::to_string(cfg.feature_dim);
    {
        std::string h;
        for (std::size_t i = 0; i < cfg.encoder_hidden.size(); ++i) {
            if (i) h += ",";
            h += std::to_string(cfg.encoder_hidden[i]);
        }
        m["encoder_hidden"] = h;
    }
    m["idm_hidden"] = std::to_string(cfg.idm_hidden);
    m["policy_hidden"] = std::to_string(cfg.policy_hidden);
    m["alpha"] = fmt(cfg.bonus.alpha);
    m["beta"] = fmt(cfg.bonus.beta);
    m["lambda"] = fmt(cfg.bonus.ridge);
    m["normalize_intrinsic"] = cfg.bonus.normalize ? "true" : "false";
    m["gamma"] = fmt(cfg.gamma);
    m["lr"] = fmt(cfg.lr);
    m["model_lr"] = fmt(cfg.model_lr);
    m["entropy_cost"] = fmt(cfg.entropy_cost);
    m["baseline_cost"] = fmt(cfg.baseline_cost);
    m["max_grad_norm"] = fmt(cfg.max_grad_norm);
    m["rms_smoothing"] = fmt(cfg.rms_smoothing);
    m["rms_eps"] = fmt(cfg.rms_eps);
    m["unroll"] = std::to_string(cfg.unroll);
    m["num_envs"] = std::to_string(cfg.num_envs);
    m["total_steps"] = std::to_string(cfg.total_steps);
    m["log_interval"] = std::to_string(cfg.log_interval);
    m["episodic"] = cfg.episodic ? "true" : "false";
    m["encoder_update_period"] = std::to_string(cfg.encoder_update_period);
    m["seed"] = std::to_string(cfg.seed);
    m["episode_cap"] = std::to_string(cfg.episode_cap);
    m["context_pool"] = std::to_string(cfg.context_pool);
    m["timing"] = cfg.timing ? "true" : "false";
    m["trace"] = cfg.trace ? "true" : "false";
    return m;
}

}  // namespace ellab
