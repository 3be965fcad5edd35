#include <gtest/gtest.h>

#include <set>

#include "ellab/bonus.hpp"
#include "ellab/gridworld.hpp"

using namespace ellab;

TEST(EnvSpec, ParsesMultiroom) {
    const EnvConfig cfg = parse_env_spec("multiroom-r3-s19-timer");
    EXPECT_EQ(cfg.task, Task::MultiRoom);
    EXPECT_EQ(cfg.rooms, 3);
    EXPECT_EQ(cfg.side, 19);
    EXPECT_TRUE(cfg.time_channel);
    EXPECT_FALSE(cfg.doors_open);
    EXPECT_EQ(cfg.canonical_spec(), "multiroom-r3-s19-timer");
}

TEST(EnvSpec, ParsesKeyuseWithNoise) {
    const EnvConfig cfg = parse_env_spec("keyuse-s9-noise4");
    EXPECT_EQ(cfg.task, Task::KeyUse);
    EXPECT_EQ(cfg.side, 9);
    EXPECT_EQ(cfg.noise_dims, 4);
    EXPECT_FALSE(cfg.time_channel);
    EXPECT_EQ(cfg.canonical_spec(), "keyuse-s9-noise4");
}

TEST(EnvSpec, RejectsBadSpecs) {
    EXPECT_THROW(parse_env_spec("multiroom-r3"), std::invalid_argument);       // no side
    EXPECT_THROW(parse_env_spec("multiroom-r5-s9"), std::invalid_argument);    // side too small
    EXPECT_THROW(parse_env_spec("maze-s9"), std::invalid_argument);            // unknown task
    EXPECT_THROW(parse_env_spec("keyuse-s5"), std::invalid_argument);          // too small
    EXPECT_THROW(parse_env_spec("keyuse-s9-open"), std::invalid_argument);     // open is multiroom-only
    EXPECT_THROW(parse_env_spec("multiroom-r3-s13-x"), std::invalid_argument); // unknown token
}

TEST(LayoutGen, DeterministicInContext) {
    const EnvConfig cfg = parse_env_spec("multiroom-r3-s13");
    const Context ctx{7, Task::MultiRoom};
    const Layout a = generate_layout(ctx, cfg);
    const Layout b = generate_layout(ctx, cfg);
    EXPECT_EQ(a.cells, b.cells);
    EXPECT_EQ(a.start_x, b.start_x);
    EXPECT_EQ(a.goal_y, b.goal_y);
}

TEST(LayoutGen, SeedsProduceDistinctLayouts) {
    const EnvConfig cfg = parse_env_spec("multiroom-r3-s13");
    std::set<std::vector<Cell>> layouts;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        layouts.insert(generate_layout(Context{seed, Task::MultiRoom}, cfg).cells);
    EXPECT_GE(layouts.size(), 95u);
}

TEST(LayoutGen, ReachabilityHoldsOverManyContexts) {
    for (const char* spec : {"multiroom-r3-s13", "keyuse-s9"}) {
        const EnvConfig cfg = parse_env_spec(spec);
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            const Layout l = generate_layout(Context{seed, cfg.task}, cfg);
            EXPECT_TRUE(goal_reachable(l)) << spec << " seed " << seed;
            EXPECT_EQ(l.at(l.start_x, l.start_y), Cell::Floor);
            EXPECT_EQ(l.at(l.goal_x, l.goal_y), Cell::Goal);
        }
    }
}

TEST(LayoutGen, BoundaryIsWall) {
    const EnvConfig cfg = parse_env_spec("multiroom-r2-s9");
    const Layout l = generate_layout(Context{3, Task::MultiRoom}, cfg);
    for (int i = 0; i < l.side; ++i) {
        EXPECT_EQ(l.at(i, 0), Cell::Wall);
        EXPECT_EQ(l.at(i, l.side - 1), Cell::Wall);
        EXPECT_EQ(l.at(0, i), Cell::Wall);
        EXPECT_EQ(l.at(l.side - 1, i), Cell::Wall);
    }
}

TEST(GridEnv, ResetGivesStartStateAtTimeZero) {
    GridEnv env(parse_env_spec("multiroom-r3-s13"));
    const Observation obs = env.reset(Context{11, Task::MultiRoom});
    EXPECT_EQ(obs.t, 0);
    EXPECT_EQ(obs.x, env.layout().start_x);
    EXPECT_EQ(obs.y, env.layout().start_y);
    EXPECT_EQ(obs.message, kMsgNone);
}

TEST(GridEnv, ResetsWithSameContextIdenticalWithoutNoise) {
    GridEnv env(parse_env_spec("multiroom-r3-s13"));
    const Observation a = env.reset(Context{11, Task::MultiRoom});
    const Observation b = env.reset(Context{11, Task::MultiRoom});
    EXPECT_EQ(a, b);
}

TEST(GridEnv, NoiseChannelDiffersAcrossResets) {
    GridEnv env(parse_env_spec("multiroom-r3-s13-noise4"));
    Observation a = env.reset(Context{11, Task::MultiRoom});
    Observation b = env.reset(Context{11, Task::MultiRoom});
    EXPECT_NE(a.noise, b.noise);
    a.noise.clear();
    b.noise.clear();
    EXPECT_EQ(a, b);  // identical except the noise channel
}

TEST(GridEnv, MoveIntoWallIsPositionNoOp) {
    // hand-built box: agent in the middle, walls all around
    Layout l;
    l.side = 3;
    l.cells.assign(9, Cell::Wall);
    l.at(1, 1) = Cell::Floor;
    l.start_x = l.start_y = 1;
    l.goal_x = l.goal_y = 1;
    EnvConfig cfg;
    cfg.side = 3;
    cfg.rooms = 1;
    GridEnv env(cfg);
    env.reset(l);
    const auto r = env.step(Action::Up);
    EXPECT_EQ(r.obs.x, 1);
    EXPECT_EQ(r.obs.y, 1);
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_EQ(r.obs.message, kMsgNone);
    EXPECT_EQ(r.obs.t, 1);
}

namespace {

Layout corridor_layout() {
    // 5x5: floor row at y=2 from x=1..3, goal at (3,2), lava at (2,1)
    Layout l;
    l.side = 5;
    l.cells.assign(25, Cell::Wall);
    l.at(1, 2) = Cell::Floor;
    l.at(2, 2) = Cell::Floor;
    l.at(3, 2) = Cell::Goal;
    l.at(2, 1) = Cell::Lava;
    l.start_x = 1;
    l.start_y = 2;
    l.goal_x = 3;
    l.goal_y = 2;
    return l;
}

}  // namespace

TEST(GridEnv, GoalGivesRewardAndEnds) {
    EnvConfig cfg;
    cfg.side = 5;
    GridEnv env(cfg);
    env.reset(corridor_layout());
    EXPECT_EQ(env.step(Action::Right).done, false);
    const auto r = env.step(Action::Right);
    EXPECT_EQ(r.reward, 1.0);
    EXPECT_TRUE(r.done);
    EXPECT_THROW(env.step(Action::Left), std::logic_error);
}

TEST(GridEnv, LavaKillsWithZeroReward) {
    EnvConfig cfg;
    cfg.side = 5;
    GridEnv env(cfg);
    env.reset(corridor_layout());
    env.step(Action::Right);          // onto (2,2)
    const auto r = env.step(Action::Up);  // into lava at (2,1)
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_TRUE(r.done);
}

TEST(GridEnv, EpisodeCapEndsWithZeroReward) {
    EnvConfig cfg;
    cfg.side = 5;
    cfg.episode_cap = 3;
    GridEnv env(cfg);
    env.reset(corridor_layout());
    env.step(Action::Up);
    env.step(Action::Up);
    const auto r = env.step(Action::Up);
    EXPECT_TRUE(r.done);
    EXPECT_EQ(r.reward, 0.0);
}

TEST(GridEnv, MultiroomDoorOpensWithInteract) {
    const EnvConfig cfg = parse_env_spec("multiroom-r2-s7");
    // find a context whose door is reachable, then walk next to it
    GridEnv env(cfg);
    Observation obs = env.reset(Context{1, Task::MultiRoom});

    // locate the door
    int dx = -1, dy = -1;
    for (int y = 0; y < cfg.side; ++y)
        for (int x = 0; x < cfg.side; ++x)
            if (env.layout().at(x, y) == Cell::DoorClosed) {
                dx = x;
                dy = y;
            }
    ASSERT_GE(dx, 0);

    // move into the closed door from the left: position no-op
    // (navigate greedily along the open row first)
    int guard = 0;
    while (!(obs.x == dx - 1 && obs.y == dy) && guard++ < 200) {
        Action a;
        if (obs.y != dy)
            a = obs.y > dy ? Action::Up : Action::Down;
        else
            a = obs.x > dx - 1 ? Action::Left : Action::Right;
        const int px = obs.x, py = obs.y;
        auto r = env.step(a);
        obs = r.obs;
        ASSERT_FALSE(r.done);
        if (obs.x == px && obs.y == py) break;  // blocked; good enough if beside the door
    }
    if (!(obs.x == dx - 1 && obs.y == dy)) GTEST_SKIP() << "context geometry unsuited";

    auto bump = env.step(Action::Right);
    EXPECT_EQ(bump.obs.x, dx - 1);  // closed door blocks
    const auto opened = env.step(Action::Interact);
    EXPECT_EQ(opened.obs.message, kMsgDoorOpened);
    EXPECT_EQ(opened.obs.grid[static_cast<std::size_t>(dy) * cfg.side + dx], Cell::DoorOpen);
    const auto through = env.step(Action::Right);
    EXPECT_EQ(through.obs.x, dx);  // now passable
}

TEST(GridEnv, KeyuseRequiresKeyForDoor) {
    // hand-built keyuse room to keep the walk deterministic:
    // start (1,1), key (1,3), door (3,2), goal (5,1)
    Layout l;
    l.side = 7;
    l.cells.assign(49, Cell::Wall);
    for (int y = 1; y <= 5; ++y)
        for (int x = 1; x <= 5; ++x) l.at(x, y) = Cell::Floor;
    for (int y = 1; y <= 5; ++y) l.at(3, y) = Cell::Wall;
    l.at(3, 2) = Cell::DoorClosed;
    l.at(1, 3) = Cell::Key;
    l.at(5, 1) = Cell::Goal;
    l.start_x = 1;
    l.start_y = 1;
    l.goal_x = 5;
    l.goal_y = 1;

    EnvConfig cfg;
    cfg.task = Task::KeyUse;
    cfg.side = 7;
    GridEnv env(cfg);
    env.reset(l);

    // interact next to the door without the key: nothing happens
    env.step(Action::Down);   // (1,2)
    env.step(Action::Right);  // (2,2), adjacent to door
    auto r = env.step(Action::Interact);
    EXPECT_EQ(r.obs.message, kMsgNone);
    EXPECT_EQ(r.obs.grid[2 * 7 + 3], Cell::DoorClosed);

    // pick up the key from above it
    env.step(Action::Left);  // (1,2), key below
    r = env.step(Action::Interact);
    EXPECT_EQ(r.obs.message, kMsgKeyPicked);
    EXPECT_TRUE(env.has_key());
    EXPECT_EQ(r.obs.grid[3 * 7 + 1], Cell::Floor);  // key vanished

    // now the door opens
    env.step(Action::Right);  // (2,2)
    r = env.step(Action::Interact);
    EXPECT_EQ(r.obs.message, kMsgDoorOpened);
    r = env.step(Action::Right);
    EXPECT_EQ(r.obs.x, 3);  // through the door cell
}

TEST(GridEnv, TimeChannelMakesIdentityKeysUniqueInEpisode) {
    GridEnv env(parse_env_spec("multiroom-r3-s13-timer"));
    Rng rng(4);
    for (int episode = 0; episode < 5; ++episode) {
        Observation obs = env.reset(Context{rng.next_u64(), Task::MultiRoom});
        std::set<std::string> keys{extract_key(obs, KeyExtractor::Identity)};
        bool done = false;
        int steps = 0;
        while (!done && steps++ < 200) {
            const auto r = env.step(static_cast<Action>(rng.below(kNumActions)));
            done = r.done;
            const auto [it, fresh] = keys.insert(extract_key(r.obs, KeyExtractor::Identity));
            EXPECT_TRUE(fresh) << "identity key repeated within an episode";
        }
    }
}

TEST(GridEnv, DoorStateChangesIdentityKeyOnRevisit) {
    // same cell, same message, timer off: opening a door flips the grid
    // channel, so the identity key of a revisited cell changes
    Layout l;
    l.side = 5;
    l.cells.assign(25, Cell::Wall);
    l.at(1, 1) = Cell::Floor;
    l.at(2, 1) = Cell::DoorClosed;
    l.at(3, 1) = Cell::Goal;
    l.start_x = 1;
    l.start_y = 1;
    l.goal_x = 3;
    l.goal_y = 1;
    EnvConfig cfg;
    cfg.side = 5;
    cfg.time_channel = false;
    GridEnv env(cfg);
    const Observation start = env.reset(l);
    const std::string id_before = extract_key(start, KeyExtractor::Identity);

    // bump a wall first so the pre/post observations share message 0
    const Observation pre = env.step(Action::Up).obs;
    ASSERT_EQ(extract_key(pre, KeyExtractor::Identity), id_before);

    env.step(Action::Interact);  // opens the adjacent door
    const Observation post = env.step(Action::Up).obs;
    EXPECT_EQ(post.x, start.x);
    EXPECT_EQ(post.y, start.y);
    EXPECT_EQ(post.message, kMsgNone);
    EXPECT_NE(extract_key(post, KeyExtractor::Identity), id_before);
    EXPECT_EQ(extract_key(post, KeyExtractor::Position),
              extract_key(start, KeyExtractor::Position));
}

TEST(GridEnv, DeterministicTrajectories) {
    const EnvConfig cfg = parse_env_spec("multiroom-r3-s13-noise2-timer");
    GridEnv a(cfg, 5);
    GridEnv b(cfg, 5);
    Observation oa = a.reset(Context{42, Task::MultiRoom});
    Observation ob = b.reset(Context{42, Task::MultiRoom});
    EXPECT_EQ(oa, ob);
    Rng actions(3);
    for (int i = 0; i < 100; ++i) {
        const auto act = static_cast<Action>(actions.below(kNumActions));
        const auto ra = a.step(act);
        const auto rb = b.step(act);
        EXPECT_EQ(ra.obs, rb.obs);
        EXPECT_EQ(ra.reward, rb.reward);
        EXPECT_EQ(ra.done, rb.done);
        if (ra.done) {
            oa = a.reset(Context{43, Task::MultiRoom});
            ob = b.reset(Context{43, Task::MultiRoom});
        }
    }
}

TEST(GridEnv, ExtrinsicReturnIsZeroOrOne) {
    GridEnv env(parse_env_spec("multiroom-r2-s9"));
    Rng rng(12);
    for (int episode = 0; episode < 50; ++episode) {
        env.reset(Context{rng.next_u64(), Task::MultiRoom});
        double total = 0.0;
        while (true) {
            const auto r = env.step(static_cast<Action>(rng.below(kNumActions)));
            total += r.reward;
            if (r.done) break;
        }
        EXPECT_TRUE(total == 0.0 || total == 1.0);
    }
}

TEST(Observation, FlatDimMatchesLayout) {
    const EnvConfig cfg = parse_env_spec("multiroom-r3-s13-noise4-timer");
    GridEnv env(cfg);
    const Observation obs = env.reset(Context{5, Task::MultiRoom});
    EXPECT_EQ(static_cast<int>(obs.flat().size()), Observation::flat_dim(cfg));
}
