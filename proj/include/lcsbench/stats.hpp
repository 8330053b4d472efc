#pragma once

#include <span>
#include <string>
#include <vector>

namespace lcsbench {

struct MannWhitneyResult {
    double u = 0.0;           // U statistic of the first sample
    double pTwoSided = 1.0;
    bool exact = false;       // exact permutation distribution was used
};

/// Mann-Whitney U with midranks for ties. Both samples <= 8 use the exact
/// permutation distribution of the observed ranks; otherwise the normal
/// approximation with tie-corrected variance and continuity correction.
/// Throws std::invalid_argument on an empty sample.
MannWhitneyResult mannWhitneyU(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sampleStd(std::span<const double> xs);

/// Midranks (1-based) of `values`.
std::vector<double> midranks(std::span<const double> values);

enum class Verdict { Better, Worse, Same };  // strength variant relative to the other system
char verdictSymbol(Verdict v) noexcept;

struct Comparison {
    std::string env;
    std::string other;  // compared system
    double meanStrength = 0.0;
    double stdStrength = 0.0;
    double meanOther = 0.0;
    double stdOther = 0.0;
    MannWhitneyResult test;
    double alpha = 0.025;
    Verdict verdict = Verdict::Same;
};

/// Compares the strength variant's FTP sample against another system's at
/// per-test level familywiseAlpha / numTests. Throws ConfigError when either
/// sample has fewer than two trials.
Comparison compareSamples(const std::string& env, const std::string& other, std::span<const double> strengthFtp,
                          std::span<const double> otherFtp, double familywiseAlpha = 0.05, int numTests = 2);

}  // namespace lcsbench
