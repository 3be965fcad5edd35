#include "ellab/gridworld.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <stdexcept>
#include <string>

namespace ellab {

namespace {

constexpr std::uint64_t kLayoutStream = 0x4C41594F55540001ull;

int parse_int(std::string_view s, std::string_view what) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("env spec: bad integer in " + std::string(what));
    return value;
}

struct Neighbors {
    int x[4], y[4];
};

Neighbors neighbors_of(int x, int y) {
    return Neighbors{{x, x, x - 1, x + 1}, {y - 1, y + 1, y, y}};
}

bool passable_for_path(Cell c) {
    return c == Cell::Floor || c == Cell::DoorClosed || c == Cell::DoorOpen || c == Cell::Goal;
}

std::vector<bool> flood_from(const Layout& l, int sx, int sy) {
    std::vector<bool> seen(l.cells.size(), false);
    std::deque<std::pair<int, int>> queue;
    queue.emplace_back(sx, sy);
    seen[static_cast<std::size_t>(sy) * l.side + sx] = true;
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        const Neighbors nb = neighbors_of(x, y);
        for (int i = 0; i < 4; ++i) {
            const int nx = nb.x[i], ny = nb.y[i];
            if (nx < 0 || ny < 0 || nx >= l.side || ny >= l.side) continue;
            const std::size_t idx = static_cast<std::size_t>(ny) * l.side + nx;
            if (seen[idx] || !passable_for_path(l.cells[idx])) continue;
            seen[idx] = true;
            queue.emplace_back(nx, ny);
        }
    }
    return seen;
}

bool validate_layout(const Layout& l, Task task) {
    const std::vector<bool> seen = flood_from(l, l.start_x, l.start_y);
    if (!seen[static_cast<std::size_t>(l.goal_y) * l.side + l.goal_x]) return false;
    if (task == Task::KeyUse) {
        // the key must be reachable from some adjacent floor cell
        int kx = -1, ky = -1;
        for (int y = 0; y < l.side; ++y)
            for (int x = 0; x < l.side; ++x)
                if (l.at(x, y) == Cell::Key) {
                    kx = x;
                    ky = y;
                }
        if (kx < 0) return false;
        const Neighbors nb = neighbors_of(kx, ky);
        bool adjacent_ok = false;
        for (int i = 0; i < 4; ++i) {
            const int nx = nb.x[i], ny = nb.y[i];
            if (nx < 0 || ny < 0 || nx >= l.side || ny >= l.side) continue;
            if (seen[static_cast<std::size_t>(ny) * l.side + nx]) adjacent_ok = true;
        }
        if (!adjacent_ok) return false;
    }
    return true;
}

Layout try_multiroom(Rng rng, const EnvConfig& cfg) {
    const int s = cfg.side;
    const int rooms = cfg.rooms;
    Layout l;
    l.side = s;
    l.rooms = rooms;
    l.cells.assign(static_cast<std::size_t>(s) * s, Cell::Floor);
    for (int i = 0; i < s; ++i) {
        l.at(i, 0) = Cell::Wall;
        l.at(i, s - 1) = Cell::Wall;
        l.at(0, i) = Cell::Wall;
        l.at(s - 1, i) = Cell::Wall;
    }

    // chain of rooms left to right; widths >= 1, separated by wall columns
    std::vector<int> widths(rooms, 1);
    int extra = (s - 1 - rooms) - rooms;
    for (int i = 0; i < extra; ++i) widths[rng.range(0, rooms - 1)] += 1;

    std::vector<std::pair<int, int>> spans;  // inclusive x ranges per room
    int x0 = 1;
    for (int r = 0; r < rooms; ++r) {
        spans.emplace_back(x0, x0 + widths[r] - 1);
        x0 += widths[r];
        if (r + 1 < rooms) {
            const int wall_x = x0;
            for (int y = 1; y < s - 1; ++y) l.at(wall_x, y) = Cell::Wall;
            const int door_y = rng.range(1, s - 2);
            l.at(wall_x, door_y) = cfg.doors_open ? Cell::DoorOpen : Cell::DoorClosed;
            x0 = wall_x + 1;
        }
    }

    auto random_floor_in = [&](int room) {
        const auto [lo, hi] = spans[room];
        for (int tries = 0; tries < 64; ++tries) {
            const int x = rng.range(lo, hi);
            const int y = rng.range(1, s - 2);
            if (l.at(x, y) == Cell::Floor) return std::pair<int, int>{x, y};
        }
        return std::pair<int, int>{lo, 1};
    };

    auto [sx, sy] = random_floor_in(0);
    l.start_x = sx;
    l.start_y = sy;
    auto [gx, gy] = random_floor_in(rooms - 1);
    l.at(gx, gy) = Cell::Goal;
    l.goal_x = gx;
    l.goal_y = gy;
    return l;
}

Layout try_keyuse(Rng rng, const EnvConfig& cfg) {
    const int s = cfg.side;
    Layout l;
    l.side = s;
    l.rooms = 2;
    l.cells.assign(static_cast<std::size_t>(s) * s, Cell::Floor);
    for (int i = 0; i < s; ++i) {
        l.at(i, 0) = Cell::Wall;
        l.at(i, s - 1) = Cell::Wall;
        l.at(0, i) = Cell::Wall;
        l.at(s - 1, i) = Cell::Wall;
    }

    const int wall_x = rng.range(3, s - 4);
    for (int y = 1; y < s - 1; ++y) l.at(wall_x, y) = Cell::Wall;
    const int door_y = rng.range(1, s - 2);
    l.at(wall_x, door_y) = Cell::DoorClosed;  // locked until the key is used

    auto random_floor = [&](int xlo, int xhi) {
        for (int tries = 0; tries < 64; ++tries) {
            const int x = rng.range(xlo, xhi);
            const int y = rng.range(1, s - 2);
            if (l.at(x, y) == Cell::Floor) return std::pair<int, int>{x, y};
        }
        return std::pair<int, int>{xlo, 1};
    };

    auto [sx, sy] = random_floor(1, wall_x - 1);
    l.start_x = sx;
    l.start_y = sy;
    auto [kx, ky] = random_floor(1, wall_x - 1);
    if (kx == sx && ky == sy) return l;  // collision; fails validation
    l.at(kx, ky) = Cell::Key;
    auto [gx, gy] = random_floor(wall_x + 1, s - 2);
    l.at(gx, gy) = Cell::Goal;
    l.goal_x = gx;
    l.goal_y = gy;
    return l;
}

}  // namespace

std::string EnvConfig::canonical_spec() const {
    std::string s;
    if (task == Task::MultiRoom) {
        s = "multiroom-r" + std::to_string(rooms) + "-s" + std::to_string(side);
        if (doors_open) s += "-open";
    } else {
        s = "keyuse-s" + std::to_string(side);
    }
    if (noise_dims > 0) s += "-noise" + std::to_string(noise_dims);
    if (time_channel) s += "-timer";
    return s;
}

EnvConfig parse_env_spec(std::string_view spec) {
    EnvConfig cfg;
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const std::size_t dash = spec.find('-', pos);
        if (dash == std::string_view::npos) {
            parts.push_back(spec.substr(pos));
            break;
        }
        parts.push_back(spec.substr(pos, dash - pos));
        pos = dash + 1;
    }
    if (parts.empty()) throw std::invalid_argument("env spec: empty string");

    bool have_side = false;
    bool have_rooms = false;
    if (parts[0] == "multiroom") {
        cfg.task = Task::MultiRoom;
    } else if (parts[0] == "keyuse") {
        cfg.task = Task::KeyUse;
        cfg.rooms = 2;
    } else {
        throw std::invalid_argument("env spec: unknown task '" + std::string(parts[0]) + "'");
    }

    for (std::size_t i = 1; i < parts.size(); ++i) {
        const std::string_view p = parts[i];
        if (p == "timer") {
            cfg.time_channel = true;
        } else if (p == "open") {
            if (cfg.task != Task::MultiRoom)
                throw std::invalid_argument("env spec: 'open' only applies to multiroom");
            cfg.doors_open = true;
        } else if (p.size() > 1 && p[0] == 'r' && cfg.task == Task::MultiRoom) {
            cfg.rooms = parse_int(p.substr(1), "rooms");
            have_rooms = true;
        } else if (p.size() > 1 && p[0] == 's') {
            cfg.side = parse_int(p.substr(1), "side");
            have_side = true;
        } else if (p.size() > 5 && p.substr(0, 5) == "noise") {
            cfg.noise_dims = parse_int(p.substr(5), "noise dims");
        } else {
            throw std::invalid_argument("env spec: unknown token '" + std::string(p) + "'");
        }
    }
    if (!have_side) throw std::invalid_argument("env spec: missing side length (s<N>)");
    if (cfg.task == Task::MultiRoom && !have_rooms)
        throw std::invalid_argument("env spec: multiroom requires a room count (r<N>)");
    if (cfg.rooms < 1) throw std::invalid_argument("env spec: room count must be >= 1");
    if (cfg.noise_dims < 0) throw std::invalid_argument("env spec: noise dims must be >= 0");
    if (cfg.task == Task::MultiRoom && cfg.side < 2 * cfg.rooms + 1)
        throw std::invalid_argument("env spec: side must be >= 2*rooms+1 for multiroom");
    if (cfg.task == Task::KeyUse && cfg.side < 7)
        throw std::invalid_argument("env spec: side must be >= 7 for keyuse");
    return cfg;
}

Layout generate_layout(const Context& ctx, const EnvConfig& cfg) {
    if (ctx.task != cfg.task)
        throw std::invalid_argument("generate_layout: context task does not match config task");
    if (cfg.task == Task::MultiRoom && cfg.side < 2 * cfg.rooms + 1)
        throw std::invalid_argument("generate_layout: side too small for room count");
    if (cfg.task == Task::KeyUse && cfg.side < 7)
        throw std::invalid_argument("generate_layout: side too small for keyuse");

    const Rng base = Rng(ctx.seed).derive(kLayoutStream);
    for (int attempt = 0; attempt < 100; ++attempt) {
        const Rng stream = base.derive(static_cast<std::uint64_t>(attempt));
        Layout l = cfg.task == Task::MultiRoom ? try_multiroom(stream, cfg) : try_keyuse(stream, cfg);
        if (validate_layout(l, cfg.task)) return l;
    }
    throw std::runtime_error("generate_layout: no reachable layout within 100 attempts for spec " +
                             cfg.canonical_spec());
}

bool goal_reachable(const Layout& layout) {
    const auto seen = flood_from(layout, layout.start_x, layout.start_y);
    return seen[static_cast<std::size_t>(layout.goal_y) * layout.side + layout.goal_x];
}

Vec Observation::flat() const {
    // the static grid block carries ~side^2 active entries while the
    // position/message channels carry O(1); the hot channels are amplified so
    // their variation survives compression into a few dozen net features
    constexpr double kPosScale = 8.0;
    constexpr double kMsgScale = 4.0;
    Vec v;
    v.reserve(grid.size() * kNumCellTags + grid.size() + 2 + (time_channel ? 1 : 0) +
              kNumMessages + noise.size());
    for (Cell c : grid) {
        for (int tag = 0; tag < kNumCellTags; ++tag)
            v.push_back(static_cast<int>(c) == tag ? 1.0 : 0.0);
    }
    for (int i = 0; i < side * side; ++i)
        v.push_back(i == y * side + x ? kPosScale : 0.0);
    v.push_back(static_cast<double>(x) / (side - 1));
    v.push_back(static_cast<double>(y) / (side - 1));
    if (time_channel) v.push_back(static_cast<double>(t) / episode_cap);
    for (int m = 0; m < kNumMessages; ++m) v.push_back(message == m ? kMsgScale : 0.0);
    for (double n : noise) v.push_back(n);
    return v;
}

int Observation::flat_dim(const EnvConfig& cfg) {
    return cfg.side * cfg.side * kNumCellTags + cfg.side * cfg.side + 2 +
           (cfg.time_channel ? 1 : 0) + kNumMessages + cfg.noise_dims;
}

GridEnv::GridEnv(EnvConfig cfg, std::uint64_t noise_seed)
    : cfg_(cfg), noise_rng_(Rng(noise_seed).derive(0x4E4F495345ull)) {}

Observation GridEnv::reset(const Context& ctx) { return reset(generate_layout(ctx, cfg_)); }

Observation GridEnv::reset(Layout layout) {
    layout_ = std::move(layout);
    cells_ = layout_.cells;
    ax_ = layout_.start_x;
    ay_ = layout_.start_y;
    t_ = 0;
    has_key_ = false;
    done_ = false;
    return make_obs(kMsgNone);
}

Observation GridEnv::make_obs(int message) {
    Observation o;
    o.side = layout_.side;
    o.grid = cells_;
    o.x = ax_;
    o.y = ay_;
    o.t = t_;
    o.message = message;
    o.time_channel = cfg_.time_channel;
    o.episode_cap = cfg_.cap();
    o.noise.resize(cfg_.noise_dims);
    for (double& n : o.noise) n = noise_rng_.normal();
    return o;
}

GridEnv::StepResult GridEnv::step(Action a) {
    if (done_) throw std::logic_error("GridEnv::step called on a finished episode");
    ++t_;
    int message = kMsgNone;
    double reward = 0.0;

    if (a == Action::Interact) {
        const Neighbors nb = neighbors_of(ax_, ay_);
        bool picked = false;
        if (cfg_.task == Task::KeyUse && !has_key_) {
            for (int i = 0; i < 4 && !picked; ++i) {
                const int nx = nb.x[i], ny = nb.y[i];
                if (nx < 0 || ny < 0 || nx >= layout_.side || ny >= layout_.side) continue;
                if (cells_[static_cast<std::size_t>(ny) * layout_.side + nx] == Cell::Key) {
                    cells_[static_cast<std::size_t>(ny) * layout_.side + nx] = Cell::Floor;
                    has_key_ = true;
                    picked = true;
                    message = kMsgKeyPicked;
                }
            }
        }
        if (!picked) {
            const bool can_open = cfg_.task == Task::MultiRoom || has_key_;
            if (can_open) {
                for (int i = 0; i < 4; ++i) {
                    const int nx = nb.x[i], ny = nb.y[i];
                    if (nx < 0 || ny < 0 || nx >= layout_.side || ny >= layout_.side) continue;
                    auto& c = cells_[static_cast<std::size_t>(ny) * layout_.side + nx];
                    if (c == Cell::DoorClosed) {
                        c = Cell::DoorOpen;
                        message = kMsgDoorOpened;
                    }
                }
            }
        }
    } else {
        int nx = ax_, ny = ay_;
        switch (a) {
            case Action::Up: ny -= 1; break;
            case Action::Down: ny += 1; break;
            case Action::Left: nx -= 1; break;
            case Action::Right: nx += 1; break;
            default: break;
        }
        if (nx >= 0 && ny >= 0 && nx < layout_.side && ny < layout_.side) {
            const Cell c = cells_[static_cast<std::size_t>(ny) * layout_.side + nx];
            if (c == Cell::Floor || c == Cell::DoorOpen) {
                ax_ = nx;
                ay_ = ny;
            } else if (c == Cell::Goal) {
                ax_ = nx;
                ay_ = ny;
                reward = 1.0;
                done_ = true;
            } else if (c == Cell::Lava) {
                ax_ = nx;
                ay_ = ny;
                done_ = true;  // hazard: episode ends with no reward
            }
        }
    }

    if (!done_ && t_ >= cfg_.cap()) done_ = true;

    StepResult out;
    out.obs = make_obs(message);
    out.reward = reward;
    out.done = done_;
    return out;
}

}  // namespace ellab
