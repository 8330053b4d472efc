#include "lcsbench/frozenlake.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lcsbench/error.hpp"

namespace lcsbench {

namespace {

constexpr std::string_view kMap4 =
    "FFFF\n"
    "FHFH\n"
    "FFFH\n"
    "HFFG\n";

constexpr std::string_view kMap8 =
    "FFFFFFFF\n"
    "FFFFFFFF\n"
    "FFFHFFFF\n"
    "FFFFFHFF\n"
    "FFFHFFFF\n"
    "FHHFFFHF\n"
    "FHFFHFHF\n"
    "FFFHFFFG\n";

// 29 holes, 114 frozen cells, every frozen cell reaches the goal.
constexpr std::string_view kMap12 =
    "FFFFFFHFFFFF\n"
    "FHFFFFFFFHFF\n"
    "FFFHFFHFFFFF\n"
    "HFFFHFFFHFFF\n"
    "FFFHFFHFFFHF\n"
    "FHFFFFFHFFFF\n"
    "FFFFHFFHFFHF\n"
    "FFHFFFFFFHFF\n"
    "HFFFFHFFHFFH\n"
    "FFFHFFHFFFFF\n"
    "FHFFFFHFFHFF\n"
    "FFFFHFFFHFFG\n";

}  // namespace

GridMap GridMap::parse(std::string_view text) {
    std::vector<std::string> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(line);
    }
    if (rows.empty()) throw ConfigError("map is empty");
    const auto m = rows.size();
    GridMap map;
    map.size_ = static_cast<int>(m);
    map.cells_.reserve(m * m);
    int goals = 0;
    for (std::size_t y = 0; y < m; ++y) {
        if (rows[y].size() != m)
            throw ConfigError("map row " + std::to_string(y + 1) + " has length " + std::to_string(rows[y].size()) +
                              ", expected " + std::to_string(m));
        for (std::size_t x = 0; x < m; ++x) {
            switch (rows[y][x]) {
                case 'F':
                case 'S': map.cells_.push_back(Cell::Frozen); break;
                case 'H': map.cells_.push_back(Cell::Hole); break;
                case 'G':
                    map.cells_.push_back(Cell::Goal);
                    map.goal_ = {static_cast<int>(x), static_cast<int>(y)};
                    ++goals;
                    break;
                default:
                    throw ConfigError("map row " + std::to_string(y + 1) + ": invalid cell character '" +
                                      std::string(1, rows[y][x]) + "'");
            }
        }
    }
    if (goals != 1) throw ConfigError("map must contain exactly one goal, found " + std::to_string(goals));
    return map;
}

GridMap GridMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open map file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

GridMap GridMap::defaultMap(int size) {
    switch (size) {
        case 4: return parse(kMap4);
        case 8: return parse(kMap8);
        case 12: return parse(kMap12);
        default: throw ConfigError("no bundled map for grid size " + std::to_string(size) + "; set map_path");
    }
}

std::vector<State> GridMap::frozenCells() const {
    std::vector<State> out;
    for (int y = 0; y < size_; ++y)
        for (int x = 0; x < size_; ++x)
            if (at({x, y}) == Cell::Frozen) out.push_back({x, y});
    return out;
}

std::string GridMap::toString() const {
    std::string out;
    out.reserve(cells_.size() + static_cast<std::size_t>(size_));
    for (int y = 0; y < size_; ++y) {
        for (int x = 0; x < size_; ++x) out.push_back(static_cast<char>(at({x, y})));
        out.push_back('\n');
    }
    return out;
}

int defaultTMax(int gridSize) {
    switch (gridSize) {
        case 4: return 150;
        case 8: return 300;
        case 12: return 450;
        default: return static_cast<int>(std::lround(37.5 * gridSize));
    }
}

std::array<Action, 2> perpendicular(Action a) noexcept {
    if (a == Action::Left || a == Action::Right) return {Action::Down, Action::Up};
    return {Action::Left, Action::Right};
}

FrozenLake::FrozenLake(GridMap map, double pSlip, double gamma, std::optional<int> tMax)
    : map_(std::move(map)), pSlip_(pSlip), gamma_(gamma), tMax_(tMax.value_or(defaultTMax(map_.size()))) {
    if (!(pSlip_ >= 0.0 && pSlip_ < 1.0)) throw ConfigError("p_slip must lie in [0, 1)");
    if (!(gamma_ >= 0.0 && gamma_ <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (tMax_ < 1) throw ConfigError("t_max must be positive");
    initial_ = map_.frozenCells();
    if (initial_.empty()) throw ConfigError("map has no frozen cells");
}

State FrozenLake::move(const State& s, Action dir) const noexcept {
    State n = s;
    switch (dir) {
        case Action::Left: n.x -= 1; break;
        case Action::Down: n.y += 1; break;
        case Action::Right: n.x += 1; break;
        case Action::Up: n.y -= 1; break;
    }
    return map_.inBounds(n) ? n : s;
}

StepOutcome FrozenLake::outcome(const State& s, Action dir) const {
    const State n = move(s, dir);
    const Cell c = map_.at(n);
    return {n, c == Cell::Goal ? 1.0 : 0.0, c != Cell::Frozen};
}

StepOutcome FrozenLake::step(const State& s, Action a, Rng& rng) const {
    if (pSlip_ == 0.0) return outcome(s, a);
    const double u = rng.uniform01();
    const auto perp = perpendicular(a);
    if (u < 1.0 - pSlip_) return outcome(s, a);
    if (u < 1.0 - 0.5 * pSlip_) return outcome(s, perp[0]);
    return outcome(s, perp[1]);
}

std::vector<Transition> FrozenLake::transitionModel(const State& s, Action a) const {
    std::vector<Transition> out;
    auto add = [&](Action dir, double p) {
        if (p <= 0.0) return;
        const StepOutcome o = outcome(s, dir);
        auto it = std::find_if(out.begin(), out.end(), [&](const Transition& t) { return t.next == o.next; });
        if (it != out.end())
            it->probability += p;
        else
            out.push_back({o.next, p, o.reward, o.terminal});
    };
    const auto perp = perpendicular(a);
    add(a, 1.0 - pSlip_);
    add(perp[0], 0.5 * pSlip_);
    add(perp[1], 0.5 * pSlip_);
    std::sort(out.begin(), out.end(), [](const Transition& l, const Transition& r) { return l.next < r.next; });
    return out;
}

}  // namespace lcsbench
