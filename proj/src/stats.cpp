#include "lcsbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lcsbench/error.hpp"

namespace lcsbench {

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sampleStd(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace {

constexpr std::size_t kExactLimit = 8;

// Enumerates every assignment of nA of the pooled ranks to the first sample.
double exactPValue(const std::vector<double>& ranks, std::size_t nA, double uObs) {
    const std::size_t n = ranks.size();
    const double nB = static_cast<double>(n - nA);
    const double centre = static_cast<double>(nA) * nB / 2.0;
    const double dObs = std::abs(uObs - centre);
    const double offset = static_cast<double>(nA) * (static_cast<double>(nA) + 1.0) / 2.0;
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(nA), true);
    std::size_t extreme = 0;
    std::size_t total = 0;
    // prev_permutation on a sorted-descending mask visits all C(n, nA) subsets.
    do {
        double rankSum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (pick[i]) rankSum += ranks[i];
        const double u = rankSum - offset;
        if (std::abs(u - centre) >= dObs - 1e-9) ++extreme;
        ++total;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

double normalSf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

MannWhitneyResult mannWhitneyU(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("Mann-Whitney U needs two non-empty samples");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    const double nA = static_cast<double>(a.size());
    const double nB = static_cast<double>(b.size());
    const double n = nA + nB;
    double rankSumA = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) rankSumA += ranks[i];

    MannWhitneyResult out;
    out.u = rankSumA - nA * (nA + 1.0) / 2.0;

    if (std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled.front(); })) {
        out.pTwoSided = 1.0;
        return out;
    }
    if (a.size() <= kExactLimit && b.size() <= kExactLimit) {
        out.exact = true;
        out.pTwoSided = exactPValue(ranks, a.size(), out.u);
        return out;
    }

    // Tie correction: sum over tie groups of t^3 - t.
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tieTerm = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tieTerm += t * t * t - t;
        i = j;
    }
    const double variance = nA * nB / 12.0 * ((n + 1.0) - tieTerm / (n * (n - 1.0)));
    if (variance <= 0.0) {
        out.pTwoSided = 1.0;
        return out;
    }
    const double dev = std::max(0.0, std::abs(out.u - nA * nB / 2.0) - 0.5);
    out.pTwoSided = std::min(1.0, 2.0 * normalSf(dev / std::sqrt(variance)));
    return out;
}

char verdictSymbol(Verdict v) noexcept {
    switch (v) {
        case Verdict::Better: return '>';
        case Verdict::Worse: return '<';
        case Verdict::Same: return '=';
    }
    return '?';
}

Comparison compareSamples(const std::string& env, const std::string& other, std::span<const double> strengthFtp,
                          std::span<const double> otherFtp, double familywiseAlpha, int numTests) {
    if (strengthFtp.size() < 2 || otherFtp.size() < 2)
        throw ConfigError("significance tests need at least two trials per system (env " + env + ")");
    Comparison c;
    c.env = env;
    c.other = other;
    c.meanStrength = mean(strengthFtp);
    c.stdStrength = sampleStd(strengthFtp);
    c.meanOther = mean(otherFtp);
    c.stdOther = sampleStd(otherFtp);
    c.test = mannWhitneyU(strengthFtp, otherFtp);
    c.alpha = familywiseAlpha / numTests;
    if (c.test.pTwoSided < c.alpha)
        c.verdict = c.meanStrength > c.meanOther ? Verdict::Better
                    : c.meanStrength < c.meanOther ? Verdict::Worse
                                                   : Verdict::Same;
    return c;
}

}  // namespace lcsbench
