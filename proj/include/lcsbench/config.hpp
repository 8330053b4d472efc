#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lcsbench/frozenlake.hpp"
#include "lcsbench/ppl.hpp"
#include "lcsbench/xcsf.hpp"

namespace lcsbench {

/// Flat `key = value` text with `[section]` headers. `#` and `;` start
/// comments. Every value remembers its source line for diagnostics.
class IniFile {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };
    using Section = std::map<std::string, Entry, std::less<>>;

    /// Throws ConfigError as "<source>:<line>: <message>".
    static IniFile parse(std::string_view text, std::string source = "<config>");
    static IniFile load(const std::filesystem::path& path);

    const std::string& source() const noexcept { return source_; }
    const std::map<std::string, Section, std::less<>>& sections() const noexcept { return sections_; }
    const Section* section(std::string_view name) const;

private:
    std::string source_;
    std::map<std::string, Section, std::less<>> sections_;
};

enum class SystemKind { Xcs, PplDl, PplSt };

std::string_view systemName(SystemKind s) noexcept;
/// Accepts "xcs", "ppl-dl", "ppl-st". Throws ConfigError otherwise.
SystemKind parseSystem(std::string_view name);
std::vector<SystemKind> parseSystemList(std::string_view csv);

struct EnvSpec {
    int gridSize = 4;
    double pSlip = 0.0;
    std::optional<std::filesystem::path> mapPath;
    double gamma = 0.95;
    std::optional<int> tMax;

    /// "M:p", e.g. "4:0.3".
    std::string label() const;
    /// Loads the map (bundled or from map_path), checks goal reachability.
    FrozenLake build() const;
};

/// Parses "4:0,4:0.3,8:0.1".
std::vector<EnvSpec> parseEnvList(std::string_view csv);

enum class NoiseTracking { Auto, On, Off };

struct HarnessConfig {
    int trials = 5;
    int epochs = 250;
    std::uint64_t seed = 0;
    int zReps = 30;
    std::vector<SystemKind> systems{SystemKind::Xcs, SystemKind::PplDl, SystemKind::PplSt};
    int workers = 0;
    std::uint64_t maxXcsSteps = 100'000'000;
};

/// Fully resolved experiment description. Learner parameters default per
/// grid size and are overridden by the [ppl] and [xcs] sections.
class ExperimentConfig {
public:
    ExperimentConfig();

    /// Throws ConfigError with a line-level diagnostic on unknown keys,
    /// unparsable values, or invalid parameter combinations.
    static ExperimentConfig fromIni(const IniFile& ini);
    static ExperimentConfig load(const std::filesystem::path& path);

    std::vector<EnvSpec> envs;
    HarnessConfig harness;
    NoiseTracking noiseTracking = NoiseTracking::Auto;

    GaConfig pplConfigFor(int gridSize) const;
    XcsConfig xcsConfigFor(const FrozenLake& env) const;

    void setPplOverride(const std::string& key, const std::string& value);
    void setXcsOverride(const std::string& key, const std::string& value);

    /// Stable `section.key=value` listing of every effective setting.
    std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    std::string hash() const;

    /// Re-validates learner parameters for every configured environment.
    void validate() const;

private:
    std::map<std::string, std::string> pplOverrides_;
    std::map<std::string, std::string> xcsOverrides_;
};

std::uint64_t fnv1a64(std::string_view data) noexcept;
std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal form of `v`.
std::string formatDouble(double v);

}  // namespace lcsbench
