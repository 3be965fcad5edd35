#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ellab/linalg.hpp"
#include "ellab/rng.hpp"

namespace ellab {

enum class Cell : std::uint8_t { Wall = 0, Floor, Lava, DoorClosed, DoorOpen, Key, Goal };
inline constexpr int kNumCellTags = 7;

enum class Task { MultiRoom, KeyUse };

enum class Action : int { Up = 0, Down, Left, Right, Interact };
inline constexpr int kNumActions = 5;

// Event codes carried on the message channel.
inline constexpr int kMsgNone = 0;
inline constexpr int kMsgDoorOpened = 1;
inline constexpr int kMsgKeyPicked = 2;
inline constexpr int kNumMessages = 3;

// A context is the per-episode random seed: same (seed, task, config) always
// yields the same layout.
struct Context {
    std::uint64_t seed = 0;
    Task task = Task::MultiRoom;
};

struct EnvConfig {
    Task task = Task::MultiRoom;
    int side = 13;
    int rooms = 3;
    int episode_cap = 0;  // 0: defaults to 12*side
    int noise_dims = 0;
    bool time_channel = false;
    bool doors_open = false;

    int cap() const { return episode_cap > 0 ? episode_cap : 12 * side; }
    std::string canonical_spec() const;
};

// Spec strings: multiroom-r<R>-s<side>[-open][-noise<k>][-timer]
//               keyuse-s<side>[-timer][-noise<k>]
EnvConfig parse_env_spec(std::string_view spec);

struct Layout {
    int side = 0;
    std::vector<Cell> cells;  // row-major, index y*side + x
    int rooms = 1;
    int start_x = 0, start_y = 0;
    int goal_x = 0, goal_y = 0;

    Cell at(int x, int y) const { return cells[static_cast<std::size_t>(y) * side + x]; }
    Cell& at(int x, int y) { return cells[static_cast<std::size_t>(y) * side + x]; }
};

// Deterministic in (ctx, cfg). Validates start->goal reachability by flood
// fill and retries with a perturbed stream; throws std::runtime_error if no
// valid layout is found within 100 attempts (a sign of a bad config).
Layout generate_layout(const Context& ctx, const EnvConfig& cfg);

// True if the goal is reachable from the start walking on floor/door/goal
// cells (closed doors count as passable since the agent can open them; lava
// and walls block).
bool goal_reachable(const Layout& layout);

struct Observation {
    int side = 0;
    std::vector<Cell> grid;  // live cell tags: doors reflect open/closed, keys vanish on pickup
    int x = 0, y = 0;
    int t = 0;
    int message = kMsgNone;
    std::vector<double> noise;
    bool time_channel = false;
    int episode_cap = 1;

    // Network input: grid one-hot per cell tag, agent-position plane,
    // normalized (x, y), t/cap when the time channel is on, message one-hot,
    // then the noise values.
    Vec flat() const;
    static int flat_dim(const EnvConfig& cfg);

    bool operator==(const Observation&) const = default;
};

class GridEnv {
public:
    explicit GridEnv(EnvConfig cfg, std::uint64_t noise_seed = 0);

    // Sample a fresh layout from the context and start an episode.
    Observation reset(const Context& ctx);
    // Start an episode on a caller-supplied layout.
    Observation reset(Layout layout);

    struct StepResult {
        Observation obs;
        double reward = 0.0;
        bool done = false;
    };

    // Movement into walls or closed doors is a position no-op. Interact picks
    // up an adjacent key (KeyUse) and opens adjacent closed doors (with the
    // key in KeyUse, unconditionally in MultiRoom). Stepping onto the goal
    // ends the episode with reward 1; stepping into lava or exhausting the
    // step cap ends it with reward 0. Throws std::logic_error after done.
    StepResult step(Action a);

    bool done() const { return done_; }
    bool has_key() const { return has_key_; }
    const Layout& layout() const { return layout_; }
    const EnvConfig& config() const { return cfg_; }

private:
    Observation make_obs(int message);

    EnvConfig cfg_;
    Layout layout_;
    std::vector<Cell> cells_;  // live copy, mutated by door/key events
    int ax_ = 0, ay_ = 0;
    int t_ = 0;
    bool has_key_ = false;
    bool done_ = true;
    Rng noise_rng_;
};

}  // namespace ellab
