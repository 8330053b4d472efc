#include "lcsbench/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "lcsbench/error.hpp"
#include "lcsbench/oracle.hpp"

namespace lcsbench {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> splitList(std::string_view csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto comma = csv.find(',', start);
        const auto piece = trim(csv.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!piece.empty()) out.emplace_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parseNumber(std::string_view text) {
    text = trim(text);
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty())
        throw ConfigError("invalid number '" + std::string(text) + "'");
    return value;
}

int parseInt(std::string_view t) { return parseNumber<int>(t); }
double parseDouble(std::string_view t) { return parseNumber<double>(t); }
std::uint64_t parseU64(std::string_view t) { return parseNumber<std::uint64_t>(t); }

using PplSetter = std::function<void(GaConfig&, std::string_view)>;
using XcsSetter = std::function<void(XcsConfig&, std::string_view)>;

const std::map<std::string, PplSetter, std::less<>>& pplSetters() {
    static const std::map<std::string, PplSetter, std::less<>> table{
        {"pop_size", [](GaConfig& c, std::string_view v) { c.popSize = parseInt(v); }},
        {"idv_size", [](GaConfig& c, std::string_view v) { c.idvSize = parseInt(v); }},
        {"tourn_size", [](GaConfig& c, std::string_view v) { c.tournSize = parseInt(v); }},
        {"p_cross", [](GaConfig& c, std::string_view v) { c.pCross = parseDouble(v); }},
        {"p_mut", [](GaConfig& c, std::string_view v) { c.pMut = parseDouble(v); }},
        {"num_reinf_rollouts", [](GaConfig& c, std::string_view v) { c.numReinfRollouts = parseInt(v); }},
        {"eta", [](GaConfig& c, std::string_view v) { c.eta = parseDouble(v); }},
        {"x0", [](GaConfig& c, std::string_view v) { c.x0 = parseDouble(v); }},
    };
    return table;
}

const std::map<std::string, XcsSetter, std::less<>>& xcsSetters() {
    static const std::map<std::string, XcsSetter, std::less<>> table{
        {"n", [](XcsConfig& c, std::string_view v) { c.N = parseInt(v); }},
        {"beta", [](XcsConfig& c, std::string_view v) { c.beta = parseDouble(v); }},
        {"alpha", [](XcsConfig& c, std::string_view v) { c.alpha = parseDouble(v); }},
        {"epsilon_0", [](XcsConfig& c, std::string_view v) { c.eps0 = parseDouble(v); }},
        {"nu", [](XcsConfig& c, std::string_view v) { c.nu = parseDouble(v); }},
        {"theta_ga", [](XcsConfig& c, std::string_view v) { c.thetaGa = parseInt(v); }},
        {"theta_del", [](XcsConfig& c, std::string_view v) { c.thetaDel = parseInt(v); }},
        {"theta_sub", [](XcsConfig& c, std::string_view v) { c.thetaSub = parseInt(v); }},
        {"tau", [](XcsConfig& c, std::string_view v) { c.tau = parseDouble(v); }},
        {"chi", [](XcsConfig& c, std::string_view v) { c.chi = parseDouble(v); }},
        {"mu_mut", [](XcsConfig& c, std::string_view v) { c.muMut = parseDouble(v); }},
        {"delta", [](XcsConfig& c, std::string_view v) { c.delta = parseDouble(v); }},
        {"epsilon_i", [](XcsConfig& c, std::string_view v) { c.epsI = parseDouble(v); }},
        {"f_i", [](XcsConfig& c, std::string_view v) { c.fI = parseDouble(v); }},
        {"x0", [](XcsConfig& c, std::string_view v) { c.x0 = parseDouble(v); }},
        {"delta_rls", [](XcsConfig& c, std::string_view v) { c.deltaRls = parseDouble(v); }},
        {"lambda_rls", [](XcsConfig& c, std::string_view v) { c.lambdaRls = parseDouble(v); }},
        {"mu_i", [](XcsConfig& c, std::string_view v) { c.muI = parseDouble(v); }},
        {"beta_epsilon", [](XcsConfig& c, std::string_view v) { c.betaEps = parseDouble(v); }},
        {"r0", [](XcsConfig& c, std::string_view v) { c.r0 = parseInt(v); }},
        {"m0", [](XcsConfig& c, std::string_view v) { c.m0 = parseInt(v); }},
        {"explore_eps", [](XcsConfig& c, std::string_view v) { c.exploreEps = parseDouble(v); }},
    };
    return table;
}

NoiseTracking parseNoiseTracking(std::string_view v) {
    v = trim(v);
    if (v == "auto") return NoiseTracking::Auto;
    if (v == "on") return NoiseTracking::On;
    if (v == "off") return NoiseTracking::Off;
    throw ConfigError("noise_tracking must be auto, on or off");
}

std::string_view noiseTrackingName(NoiseTracking n) {
    switch (n) {
        case NoiseTracking::Auto: return "auto";
        case NoiseTracking::On: return "on";
        case NoiseTracking::Off: return "off";
    }
    return "auto";
}

[[noreturn]] void failAt(const IniFile& ini, int line, const std::string& msg) {
    throw ConfigError(ini.source() + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

IniFile IniFile::parse(std::string_view text, std::string source) {
    IniFile ini;
    ini.source_ = std::move(source);
    std::istringstream in{std::string(text)};
    std::string raw;
    std::string current;
    int lineNo = 0;
    while (std::getline(in, raw)) {
        ++lineNo;
        std::string_view line = raw;
        if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') failAt(ini, lineNo, "unterminated section header");
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (current.empty()) failAt(ini, lineNo, "empty section name");
            ini.sections_[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) failAt(ini, lineNo, "expected 'key = value'");
        if (current.empty()) failAt(ini, lineNo, "key outside of any section");
        const std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) failAt(ini, lineNo, "empty key");
        auto& section = ini.sections_[current];
        if (section.contains(key)) failAt(ini, lineNo, "duplicate key '" + key + "'");
        section.emplace(key, Entry{std::move(value), lineNo});
    }
    return ini;
}

IniFile IniFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

const IniFile::Section* IniFile::section(std::string_view name) const {
    const auto it = sections_.find(name);
    return it == sections_.end() ? nullptr : &it->second;
}

std::string_view systemName(SystemKind s) noexcept {
    switch (s) {
        case SystemKind::Xcs: return "xcs";
        case SystemKind::PplDl: return "ppl-dl";
        case SystemKind::PplSt: return "ppl-st";
    }
    return "?";
}

SystemKind parseSystem(std::string_view name) {
    name = trim(name);
    if (name == "xcs") return SystemKind::Xcs;
    if (name == "ppl-dl") return SystemKind::PplDl;
    if (name == "ppl-st") return SystemKind::PplSt;
    throw ConfigError("unknown system '" + std::string(name) + "' (expected xcs, ppl-dl, ppl-st)");
}

std::vector<SystemKind> parseSystemList(std::string_view csv) {
    std::vector<SystemKind> out;
    for (const auto& item : splitList(csv)) {
        const auto s = parseSystem(item);
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    if (out.empty()) throw ConfigError("system list is empty");
    return out;
}

std::string EnvSpec::label() const { return std::to_string(gridSize) + ":" + formatDouble(pSlip); }

FrozenLake EnvSpec::build() const {
    GridMap map = mapPath ? GridMap::load(*mapPath) : GridMap::defaultMap(gridSize);
    if (map.size() != gridSize)
        throw ConfigError("map size " + std::to_string(map.size()) + " does not match grid_size " +
                          std::to_string(gridSize));
    requireGoalReachable(map);
    return FrozenLake(std::move(map), pSlip, gamma, tMax);
}

std::vector<EnvSpec> parseEnvList(std::string_view csv) {
    std::vector<EnvSpec> out;
    for (const auto& item : splitList(csv)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("environment '" + item + "' must look like M:p_slip");
        EnvSpec e;
        e.gridSize = parseInt(std::string_view(item).substr(0, colon));
        e.pSlip = parseDouble(std::string_view(item).substr(colon + 1));
        if (e.gridSize < 2) throw ConfigError("grid size must be at least 2");
        if (!(e.pSlip >= 0.0 && e.pSlip < 1.0)) throw ConfigError("p_slip must lie in [0, 1)");
        out.push_back(e);
    }
    if (out.empty()) throw ConfigError("environment list is empty");
    return out;
}

ExperimentConfig::ExperimentConfig() : envs{EnvSpec{}} {}

ExperimentConfig ExperimentConfig::fromIni(const IniFile& ini) {
    ExperimentConfig cfg;
    for (const auto& [name, section] : ini.sections()) {
        if (name != "env" && name != "ppl" && name != "xcs" && name != "harness") {
            const int line = section.empty() ? 0 : section.begin()->second.line;
            failAt(ini, line, "unknown section [" + name + "]");
        }
    }

    auto guarded = [&](const IniFile::Entry& e, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& err) {
            failAt(ini, e.line, err.what());
        }
    };

    if (const auto* env = ini.section("env")) {
        std::vector<int> sizes{4};
        std::vector<double> slips{0.0};
        EnvSpec base;
        for (const auto& [key, e] : *env) {
            guarded(e, [&] {
                if (key == "grid_size") {
                    sizes.clear();
                    for (const auto& v : splitList(e.value)) sizes.push_back(parseInt(v));
                    if (sizes.empty()) throw ConfigError("grid_size is empty");
                } else if (key == "p_slip") {
                    slips.clear();
                    for (const auto& v : splitList(e.value)) {
                        const double p = parseDouble(v);
                        if (!(p >= 0.0 && p < 1.0)) throw ConfigError("p_slip must lie in [0, 1)");
                        slips.push_back(p);
                    }
                    if (slips.empty()) throw ConfigError("p_slip is empty");
                } else if (key == "map_path") {
                    std::filesystem::path p(e.value);
                    if (p.is_relative()) p = std::filesystem::path(ini.source()).parent_path() / p;
                    base.mapPath = p;
                } else if (key == "gamma") {
                    base.gamma = parseDouble(e.value);
                    if (!(base.gamma >= 0.0 && base.gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
                } else if (key == "t_max") {
                    base.tMax = parseInt(e.value);
                    if (*base.tMax < 1) throw ConfigError("t_max must be positive");
                } else {
                    throw ConfigError("unknown key '" + key + "' in [env]");
                }
            });
        }
        if (base.mapPath && sizes.size() != 1) {
            failAt(ini, env->at("map_path").line, "map_path requires a single grid_size");
        }
        if (base.mapPath && !std::filesystem::exists(*base.mapPath))
            failAt(ini, env->at("map_path").line, "map file not found: " + base.mapPath->string());
        cfg.envs.clear();
        for (int m : sizes) {
            for (double p : slips) {
                EnvSpec e = base;
                e.gridSize = m;
                e.pSlip = p;
                cfg.envs.push_back(e);
            }
        }
    }

    if (const auto* harness = ini.section("harness")) {
        for (const auto& [key, e] : *harness) {
            guarded(e, [&] {
                auto& h = cfg.harness;
                if (key == "trials") {
                    h.trials = parseInt(e.value);
                    if (h.trials < 1) throw ConfigError("trials must be positive");
                } else if (key == "epochs") {
                    h.epochs = parseInt(e.value);
                    if (h.epochs < 1) throw ConfigError("epochs must be positive");
                } else if (key == "seed") {
                    h.seed = parseU64(e.value);
                } else if (key == "z_reps") {
                    h.zReps = parseInt(e.value);
                    if (h.zReps < 1) throw ConfigError("z_reps must be positive");
                } else if (key == "systems") {
                    h.systems = parseSystemList(e.value);
                } else if (key == "workers") {
                    h.workers = parseInt(e.value);
                    if (h.workers < 0) throw ConfigError("workers must be non-negative");
                } else if (key == "max_xcs_steps") {
                    h.maxXcsSteps = parseU64(e.value);
                } else {
                    throw ConfigError("unknown key '" + key + "' in [harness]");
                }
            });
        }
    }

    if (const auto* ppl = ini.section("ppl")) {
        for (const auto& [key, e] : *ppl) {
            guarded(e, [&] {
                if (key == "variant") {
                    const auto v = std::string(trim(e.value));
                    SystemKind keep;
                    if (v == "dl")
                        keep = SystemKind::PplDl;
                    else if (v == "st")
                        keep = SystemKind::PplSt;
                    else
                        throw ConfigError("variant must be dl or st");
                    auto& sys = cfg.harness.systems;
                    const SystemKind drop = keep == SystemKind::PplDl ? SystemKind::PplSt : SystemKind::PplDl;
                    sys.erase(std::remove(sys.begin(), sys.end(), drop), sys.end());
                } else {
                    cfg.setPplOverride(key, e.value);
                }
            });
        }
    }

    if (const auto* xcs = ini.section("xcs")) {
        for (const auto& [key, e] : *xcs) {
            guarded(e, [&] {
                if (key == "noise_tracking")
                    cfg.noiseTracking = parseNoiseTracking(e.value);
                else
                    cfg.setXcsOverride(key, e.value);
            });
        }
    }

    try {
        cfg.validate();
    } catch (const ConfigError& err) {
        throw ConfigError(ini.source() + ": " + err.what());
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) { return fromIni(IniFile::load(path)); }

void ExperimentConfig::setPplOverride(const std::string& key, const std::string& value) {
    const auto it = pplSetters().find(key);
    if (it == pplSetters().end()) throw ConfigError("unknown key '" + key + "' in [ppl]");
    GaConfig probe;
    it->second(probe, value);
    pplOverrides_[key] = std::string(trim(value));
}

void ExperimentConfig::setXcsOverride(const std::string& key, const std::string& value) {
    const auto it = xcsSetters().find(key);
    if (it == xcsSetters().end()) throw ConfigError("unknown key '" + key + "' in [xcs]");
    XcsConfig probe;
    it->second(probe, value);
    xcsOverrides_[key] = std::string(trim(value));
}

GaConfig ExperimentConfig::pplConfigFor(int gridSize) const {
    GaConfig cfg = GaConfig::forGrid(gridSize);
    for (const auto& [k, v] : pplOverrides_) pplSetters().at(k)(cfg, v);
    return cfg;
}

XcsConfig ExperimentConfig::xcsConfigFor(const FrozenLake& env) const {
    XcsConfig cfg = XcsConfig::forGrid(env.gridSize());
    for (const auto& [k, v] : xcsOverrides_) xcsSetters().at(k)(cfg, v);
    switch (noiseTracking) {
        case NoiseTracking::Auto: cfg.noiseTracking = !env.isDeterministic(); break;
        case NoiseTracking::On: cfg.noiseTracking = true; break;
        case NoiseTracking::Off: cfg.noiseTracking = false; break;
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    if (envs.empty()) throw ConfigError("no environments configured");
    if (harness.systems.empty()) throw ConfigError("no systems selected");
    for (const auto& e : envs) {
        pplConfigFor(e.gridSize).validate();
        XcsConfig x = XcsConfig::forGrid(e.gridSize);
        for (const auto& [k, v] : xcsOverrides_) xcsSetters().at(k)(x, v);
        x.validate();
    }
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream out;
    for (const auto& e : envs) {
        out << "env=" << e.label() << " gamma=" << formatDouble(e.gamma)
            << " t_max=" << (e.tMax ? std::to_string(*e.tMax) : std::string("default"))
            << " map=" << (e.mapPath ? e.mapPath->generic_string() : std::string("bundled")) << '\n';
    }
    out << "harness.trials=" << harness.trials << '\n'
        << "harness.epochs=" << harness.epochs << '\n'
        << "harness.seed=" << harness.seed << '\n'
        << "harness.z_reps=" << harness.zReps << '\n'
        << "harness.max_xcs_steps=" << harness.maxXcsSteps << '\n';
    out << "harness.systems=";
    for (std::size_t i = 0; i < harness.systems.size(); ++i) out << (i ? "," : "") << systemName(harness.systems[i]);
    out << '\n';
    for (const auto& [k, v] : pplOverrides_) out << "ppl." << k << '=' << v << '\n';
    for (const auto& [k, v] : xcsOverrides_) out << "xcs." << k << '=' << v << '\n';
    out << "xcs.noise_tracking=" << noiseTrackingName(noiseTracking) << '\n';
    return out.str();
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(canonical())); }

std::uint64_t fnv1a64(std::string_view data) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string formatDouble(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

}  // namespace lcsbench
