#include <gtest/gtest.h>

#include <cmath>

#include "ellab/encoders.hpp"
#include "fd_util.hpp"

using namespace ellab;

TEST(OneHot, BasicEncoding) {
    EXPECT_EQ(one_hot_encode(0, 3), (Vec{1.0, 0.0, 0.0}));
    EXPECT_EQ(one_hot_encode(2, 3), (Vec{0.0, 0.0, 1.0}));
    EXPECT_THROW(one_hot_encode(5, 3), std::invalid_argument);
    EXPECT_THROW(one_hot_encode(-1, 3), std::invalid_argument);
}

TEST(Encoder, SameSpecAndSeedGiveIdenticalParameters) {
    EncoderSpec spec;
    spec.kind = EncoderKind::RandomNet;
    spec.input_dim = 10;
    spec.feature_dim = 6;
    spec.hidden = {8};
    const Encoder a = Encoder::build(spec, 99);
    const Encoder b = Encoder::build(spec, 99);
    EXPECT_TRUE(a.phi() == b.phi());
    const Vec x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    EXPECT_EQ(a.encode(x), b.encode(x));
}

TEST(Encoder, EncodeNeverMutatesParameters) {
    EncoderSpec spec;
    spec.kind = EncoderKind::InverseDynamics;
    spec.input_dim = 5;
    spec.feature_dim = 4;
    spec.hidden = {6};
    spec.num_actions = 3;
    Encoder e = Encoder::build(spec, 7);
    const Mlp before = e.phi();
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        Vec x(5);
        for (double& v : x) v = rng.normal();
        e.encode(x);
    }
    EXPECT_TRUE(e.phi() == before);
}

TEST(Encoder, PolicyTieReadsExternalTrunk) {
    Rng rng(3);
    const Mlp trunk = make_mlp(4, {6}, 5, rng);
    const Encoder e = Encoder::policy_tie(&trunk);
    EXPECT_EQ(e.out_dim(), 5);
    const Vec x{0.5, -0.5, 1.0, 0.0};
    EXPECT_EQ(e.encode(x), mlp_forward(trunk, x));
}

TEST(Encoder, OneHotKindUsesKeyFunction) {
    const Encoder e = Encoder::one_hot(4, [](std::span<const double> obs) {
        return static_cast<int>(obs[0]);
    });
    EXPECT_EQ(e.encode(Vec{2.0}), (Vec{0.0, 0.0, 1.0, 0.0}));
    EXPECT_EQ(e.out_dim(), 4);
}

TEST(IdmLoss, UniformLogitsGiveLogNumActions) {
    Rng rng(5);
    Mlp phi = make_mlp(3, {4}, 2, rng);
    Mlp g = make_mlp(4, {6}, 4, rng);
    for (Layer& l : g.layers) {
        std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    const IdmLoss out = idm_loss_and_grad(phi, g, Vec{1.0, 0.0, 0.0}, 1, Vec{0.0, 1.0, 0.0});
    EXPECT_NEAR(out.loss, std::log(4.0), 1e-12);
}

TEST(IdmLoss, SaturatedCorrectPredictionIsNearZero) {
    Rng rng(6);
    Mlp phi = make_mlp(3, {4}, 2, rng);
    Mlp g = make_mlp(4, {6}, 4, rng);
    for (Layer& l : g.layers) {
        std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    g.layers.back().b = Vec{-30.0, -30.0, 30.0, -30.0};
    const IdmLoss out = idm_loss_and_grad(phi, g, Vec{1.0, 0.0, 0.0}, 2, Vec{0.0, 1.0, 0.0});
    EXPECT_NEAR(out.loss, 0.0, 1e-12);
}

TEST(IdmLoss, ActionIndexOutOfRangeThrows) {
    Rng rng(15);
    Mlp phi = make_mlp(3, {4}, 2, rng);
    Mlp g = make_mlp(4, {6}, 4, rng);
    EXPECT_THROW(idm_loss_and_grad(phi, g, Vec{1.0, 0.0, 0.0}, 4, Vec{0.0, 1.0, 0.0}),
                 std::invalid_argument);
}

TEST(IdmLoss, GradientsMatchFiniteDifferences) {
    Rng rng(77);
    for (int rep = 0; rep < 4; ++rep) {
        Mlp phi, g;
        Vec obs_t(4), obs_next(4);
        double margin = 0.0;
        do {
            phi = make_mlp(4, {6}, 3, rng);
            g = make_mlp(6, {8}, 5, rng);
            for (double& v : obs_t) v = rng.normal();
            for (double& v : obs_next) v = rng.normal();
            const Vec a = mlp_forward(phi, obs_t);
            const Vec b = mlp_forward(phi, obs_next);
            Vec joint(6);
            std::copy(a.begin(), a.end(), joint.begin());
            std::copy(b.begin(), b.end(), joint.begin() + 3);
            margin = std::min({testutil::relu_margin(phi, obs_t),
                               testutil::relu_margin(phi, obs_next),
                               testutil::relu_margin(g, joint)});
        } while (margin < 1e-3);
        const int action = static_cast<int>(rng.below(5));

        const IdmLoss out = idm_loss_and_grad(phi, g, obs_t, action, obs_next);
        auto loss = [&]() {
            GradBuffer pg = zeros_like(phi), gg = zeros_like(g);
            return idm_loss_acc(phi, g, obs_t, action, obs_next, pg, gg);
        };
        EXPECT_LT(testutil::max_rel_err_params(phi, out.phi_grads, loss), 1e-4);
        EXPECT_LT(testutil::max_rel_err_params(g, out.g_grads, loss), 1e-4);
    }
}

TEST(ForwardModel, PerfectPredictorGivesZeroLoss) {
    Rng rng(8);
    Mlp phi = make_mlp(3, {4}, 2, rng);
    for (Layer& l : phi.layers) {
        std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    Mlp f = make_mlp(2 + 3, {4}, 2, rng);
    for (Layer& l : f.layers) {
        std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    // phi is identically zero, so a zero predictor is exact
    const ForwardModelLoss out =
        forward_model_loss_and_grad(phi, f, Vec{1.0, 0.0, 0.0}, 1, Vec{0.0, 1.0, 0.0});
    EXPECT_DOUBLE_EQ(out.loss, 0.0);
}

TEST(ForwardModel, UnitErrorGivesHalf) {
    Rng rng(9);
    Mlp phi = make_mlp(3, {4}, 2, rng);
    for (Layer& l : phi.layers) {
        std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    Mlp f = make_mlp(2 + 3, {4}, 2, rng);
    for (Layer& l : f.layers) {
        std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    f.layers.back().b = Vec{1.0, 0.0};  // prediction error (1, 0)
    const ForwardModelLoss out =
        forward_model_loss_and_grad(phi, f, Vec{1.0, 0.0, 0.0}, 0, Vec{0.0, 1.0, 0.0});
    EXPECT_DOUBLE_EQ(out.loss, 0.5);
}

TEST(ForwardModel, GradientsMatchFiniteDifferences) {
    Rng rng(10);
    for (int rep = 0; rep < 4; ++rep) {
        Mlp phi, f;
        Vec obs_t(4), obs_next(4);
        double margin = 0.0;
        const int n = 3, num_actions = 4;
        int action = 0;
        do {
            phi = make_mlp(4, {6}, n, rng);
            f = make_mlp(n + num_actions, {8}, n, rng);
            for (double& v : obs_t) v = rng.normal();
            for (double& v : obs_next) v = rng.normal();
            action = static_cast<int>(rng.below(num_actions));
            const Vec a = mlp_forward(phi, obs_t);
            Vec joint(n + num_actions, 0.0);
            std::copy(a.begin(), a.end(), joint.begin());
            joint[n + action] = 1.0;
            margin = std::min({testutil::relu_margin(phi, obs_t),
                               testutil::relu_margin(phi, obs_next),
                               testutil::relu_margin(f, joint)});
        } while (margin < 1e-3);

        const ForwardModelLoss out = forward_model_loss_and_grad(phi, f, obs_t, action, obs_next);
        auto loss = [&]() {
            GradBuffer fg = zeros_like(f);
            return forward_model_loss_acc(phi, f, obs_t, action, obs_next, fg);
        };
        EXPECT_LT(testutil::max_rel_err_params(f, out.f_grads, loss), 1e-4);
    }
}

TEST(IdmTraining, LearnsDeterministicToyChain) {
    // two states, two actions; the action is readable off (s, s'):
    // a=0 always lands in s0, a=1 always lands in s1
    const Vec s0{1.0, 0.0};
    const Vec s1{0.0, 1.0};
    struct Sample {
        const Vec* s;
        int a;
        const Vec* next;
    };
    const std::vector<Sample> data{{&s0, 0, &s0}, {&s0, 1, &s1}, {&s1, 0, &s0}, {&s1, 1, &s1}};

    EncoderSpec spec;
    spec.kind = EncoderKind::InverseDynamics;
    spec.input_dim = 2;
    spec.feature_dim = 4;
    spec.hidden = {8};
    spec.idm_hidden = 16;
    spec.num_actions = 2;
    Encoder enc = Encoder::build(spec, 21);
    RmsPropState phi_opt = make_rmsprop_state(enc.phi());
    RmsPropState g_opt = make_rmsprop_state(enc.idm_head());

    double last = 0.0;
    for (int step = 0; step < 500; ++step) {
        GradBuffer pg = zeros_like(enc.phi());
        GradBuffer gg = zeros_like(enc.idm_head());
        last = 0.0;
        for (const Sample& d : data)
            last += idm_loss_acc(enc.phi(), enc.idm_head(), *d.s, d.a, *d.next, pg, gg);
        last /= data.size();
        rmsprop_step(enc.phi(), pg, phi_opt, 0.01, 0.99, 1e-5);
        rmsprop_step(enc.idm_head(), gg, g_opt, 0.01, 0.99, 1e-5);
    }
    EXPECT_LT(last, std::log(2.0));
}

TEST(IdmTraining, CannotBeatChanceWhenActionsAreIndependent) {
    // identical (s, s') pairs labeled with both actions equally often: the
    // optimum is the entropy of the action marginal, ln 2
    const Vec s0{1.0, 0.0};
    const Vec s1{0.0, 1.0};
    struct Sample {
        const Vec* s;
        int a;
        const Vec* next;
    };
    const std::vector<Sample> data{{&s0, 0, &s1}, {&s0, 1, &s1}, {&s1, 0, &s0}, {&s1, 1, &s0}};

    EncoderSpec spec;
    spec.kind = EncoderKind::InverseDynamics;
    spec.input_dim = 2;
    spec.feature_dim = 4;
    spec.hidden = {8};
    spec.idm_hidden = 16;
    spec.num_actions = 2;
    Encoder enc = Encoder::build(spec, 22);
    RmsPropState phi_opt = make_rmsprop_state(enc.phi());
    RmsPropState g_opt = make_rmsprop_state(enc.idm_head());

    double last = 0.0;
    for (int step = 0; step < 800; ++step) {
        GradBuffer pg = zeros_like(enc.phi());
        GradBuffer gg = zeros_like(enc.idm_head());
        last = 0.0;
        for (const Sample& d : data)
            last += idm_loss_acc(enc.phi(), enc.idm_head(), *d.s, d.a, *d.next, pg, gg);
        last /= data.size();
        rmsprop_step(enc.phi(), pg, phi_opt, 0.01, 0.99, 1e-5);
        rmsprop_step(enc.idm_head(), gg, g_opt, 0.01, 0.99, 1e-5);
    }
    EXPECT_GE(last, std::log(2.0) - 1e-6);
}
