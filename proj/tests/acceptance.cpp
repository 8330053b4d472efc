// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 on any FAIL.

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "lcsbench/harness.hpp"

using namespace lcsbench;

namespace {

constexpr std::uint64_t kSeed = 1;

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  %-34s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void guarded(const std::string& name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

EnvSpec envSpec(int m, double p) {
    EnvSpec e;
    e.gridSize = m;
    e.pSlip = p;
    return e;
}

double meanFraction(const ExperimentResults& r, SystemKind sys) {
    std::vector<double> xs;
    for (const auto& t : r.trials)
        if (t.system == sys) xs.push_back(t.ftp);
    return mean(xs);
}

// ---------------------------------------------------------------------------

void oracleExactness() {
    const auto t0 = std::chrono::steady_clock::now();
    FrozenLake env(GridMap::defaultMap(4), 0.0);
    const auto vi = valueIteration(env);
    const auto d = bfsDistances(env.map());
    double worstV = 0.0;
    for (const State& s : env.initialStates()) {
        const double expected = std::pow(0.95, *d[static_cast<std::size_t>(s.y * 4 + s.x)] - 1);
        worstV = std::max(worstV, std::abs(vi.q.value(s) - expected));
    }
    const auto z = buildTestSequence(env, 30);
    const auto otp = computeOtp(env, z, kSeed, &vi);
    const double otpGap = std::abs(otp.otp - rolloutOtp(env, vi, z, kSeed));
    const double t = seconds(t0);
    report("oracle exactness", env.initialStates().size() == 11 && worstV < 1e-10 && otpGap < 1e-12 && t < 1.0,
           fmt("states=%zu max|V*-0.95^(d-1)|=%.2e |OTP_roll-OTP_closed|=%.2e time=%.3fs",
               env.initialStates().size(), worstV, otpGap, t));
}

// The desk-scale (4,0) run feeds the benchmark, epoch accounting and
// interpretability checks.
void deterministicBenchmark() {
    ExperimentConfig cfg;
    cfg.envs = {envSpec(4, 0.0)};
    cfg.harness.trials = 5;
    cfg.harness.epochs = 250;
    cfg.harness.seed = kSeed;
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = runExperiment(cfg);
    const double t = seconds(t0);

    const GaConfig ppl = cfg.pplConfigFor(4);
    const XcsConfig xcs = cfg.xcsConfigFor(results.envs.front().env);
    const double fx = meanFraction(results, SystemKind::Xcs);
    const double fst = meanFraction(results, SystemKind::PplSt);
    const double fdl = meanFraction(results, SystemKind::PplDl);
    const bool defaults = ppl.popSize == 112 && ppl.idvSize == 7 && xcs.N == 700;
    report("desk benchmark (4,0)", defaults && fx >= 0.90 && fst >= 0.90 && fdl >= 0.85,
           fmt("popSize=%d idvSize=%d N=%d FTP xcs=%.3f ppl-st=%.3f ppl-dl=%.3f time=%.0fs", ppl.popSize,
               ppl.idvSize, xcs.N, fx, fst, fdl, t));

    bool exact = true;
    std::uint64_t seen = 0;
    for (const auto& tr : results.trials) {
        if (tr.system == SystemKind::Xcs) continue;
        seen = tr.gaInvocations;
        exact = exact && tr.gaInvocations == 14000 && tr.epochs.size() == 250;
    }
    exact = exact && episodesPerGen(500, 10, 50) == 30000 && episodesPerGen(672, 10, 3420) == 2304960;
    report("epoch accounting", exact,
           fmt("GA invocations per PPL trial=%llu, episodesPerGen(500,10,50)=%llu, episodesPerGen(672,10,3420)=%llu",
               static_cast<unsigned long long>(seen),
               static_cast<unsigned long long>(episodesPerGen(500, 10, 50)),
               static_cast<unsigned long long>(episodesPerGen(672, 10, 3420))));

    const FrozenLake& env = results.envs.front().env;
    bool sizesExact = true;
    bool bounded = true;
    std::vector<double> bam;
    int snapshots = 0;
    for (const auto& tr : results.trials) {
        int r = 0, rba = 0;
        if (tr.system == SystemKind::PplDl) {
            // The rule that fires in each state is its best-action rule.
            DlIndividual idv;
            idv.rules = tr.snapshot.at("rules").get<std::vector<RuleGene>>();
            std::set<std::size_t> firing;
            for (const State& s : env.initialStates())
                for (std::size_t i = 0; i < idv.rules.size(); ++i)
                    if (idv.rules[i].condition.matches(s)) {
                        firing.insert(i);
                        break;
                    }
            r = static_cast<int>(idv.rules.size());
            rba = static_cast<int>(firing.size());
        } else {
            const auto st = analyzeSnapshot(tr.snapshot);
            r = st.rulesetSize;
            rba = st.bamSize;
            if (tr.system == SystemKind::PplSt) {
                sizesExact = sizesExact && r == 7;
                bam.push_back(rba);
            }
        }
        bounded = bounded && rba <= r;
        ++snapshots;
    }
    const double meanBam = mean(bam);
    report("interpretability metrics", sizesExact && bam.size() == 5 && meanBam >= 4.5 && meanBam <= 7.0 && bounded,
           fmt("ppl-st |R|=7 in all %zu trials: %s, mean |R_BA|=%.2f, |R_BA|<=|R| in %d snapshots: %s", bam.size(),
               sizesExact ? "yes" : "no", meanBam, snapshots, bounded ? "yes" : "no"));
}

void stochasticBenchmark() {
    ExperimentConfig cfg;
    cfg.envs = {envSpec(4, 0.3)};
    cfg.harness.trials = 5;
    cfg.harness.epochs = 250;
    cfg.harness.seed = kSeed;
    cfg.harness.zReps = 10;
    cfg.harness.systems = {SystemKind::PplSt};
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = runExperiment(cfg);
    std::string fractions;
    for (const auto& t : results.trials) fractions += fmt("%.3f ", t.ftp);
    const double f = meanFraction(results, SystemKind::PplSt);
    report("stochastic check (4,0.3)", f >= 0.80,
           fmt("mu_rep=10 |z|=%zu ppl-st mean FTP=%.3f [%s] time=%.0fs", results.envs.front().z.size(), f,
               fractions.c_str(), seconds(t0)));
}

void payoffEquivalence() {
    Rng rng(deriveSeed(kSeed, {1}));
    const double gamma = 0.95;
    double worst = 0.0;
    for (int rep = 0; rep < 10000; ++rep) {
        const int T = rng.uniformInt(1, 20);
        std::vector<double> r(static_cast<std::size_t>(T));
        for (auto& x : r) x = rng.bernoulli(0.3) ? 0.0 : rng.uniform01() * 2.0 - 0.5;
        const auto p = reinforcementPayoffs(r, gamma);
        for (int i = 0; i < T; ++i) {
            double tail = 0.0;
            for (int k = i; k < T; ++k) tail += r[static_cast<std::size_t>(k)];
            const double expected = std::pow(gamma, T - 1 - i) * tail;
            worst = std::max(worst, std::abs(p[static_cast<std::size_t>(i)] - expected));
        }
    }
    report("payoff oracle equivalence", worst < 1e-12,
           fmt("10000 sequences, max |P_i - gamma^(T-1-i) sum r_k|=%.2e", worst));
}

void nlmsContraction() {
    Rng rng(deriveSeed(kSeed, {2}));
    double worst = 0.0;
    double worstUnit = 0.0;
    for (int rep = 0; rep < 10000; ++rep) {
        std::vector<StRule> rules(1);
        for (auto& w : rules[0].weights) w = rng.uniform01() * 2.0 - 1.0;
        rules[0].variance = rng.uniform01();
        const State s{rng.uniformInt(0, 11), rng.uniformInt(0, 11)};
        const double x0 = 0.5 + rng.uniform01() * 20.0;
        const double P = rng.uniform01() * 2.0 - 0.5;
        const bool unit = rep % 10 == 0;
        const double eta = unit ? 1.0 : 1.0 - rng.uniform01();  // (0, 1]
        const Features x = augment(s, x0);
        const double before = std::abs(P - rules[0].prediction(x));
        const std::uint32_t idx = 0;
        updateActionSet(rules, std::span<const std::uint32_t>(&idx, 1), P, s, eta, x0);
        const double after = std::abs(P - rules[0].prediction(x));
        worst = std::max(worst, std::abs(after - (1.0 - eta) * before));
        if (unit) worstUnit = std::max(worstUnit, after);
    }
    report("NLMS contraction", worst < 1e-12 && worstUnit < 1e-12,
           fmt("10000 updates, max ||P-pred'| - (1-eta)|P-pred||=%.2e, eta=1 max residual=%.2e", worst, worstUnit));
}

Decision naiveDl(const std::vector<RuleGene>& rules, const State& s) {
    for (const auto& r : rules) {
        bool ok = true;
        for (int d = 0; d < 2; ++d) {
            const int v = d == 0 ? s.x : s.y;
            const auto& pr = r.condition.dims[static_cast<std::size_t>(d)];
            const int lo = pr.p < pr.q ? pr.p : pr.q;
            const int hi = pr.p < pr.q ? pr.q : pr.p;
            if (v < lo || v > hi) ok = false;
        }
        if (ok) return r.action;
    }
    return std::nullopt;
}

Decision naiveSt(const std::vector<StRule>& rules, const State& s, double x0) {
    Decision best;
    double bestVal = 0.0;
    for (int a = 0; a < 4; ++a) {
        bool any = false;
        double top = 0.0;
        for (const auto& r : rules) {
            if (toIndex(r.gene.action) != a || !naiveDl({r.gene}, s)) continue;
            const double v = r.weights[0] * x0 + r.weights[1] * s.x + r.weights[2] * s.y - std::sqrt(r.variance);
            if (!any || v > top) top = v;
            any = true;
        }
        if (any && (!best || top > bestVal)) {
            best = actionFromIndex(a);
            bestVal = top;
        }
    }
    return best;
}

void inferenceEquivalence() {
    Rng rng(deriveSeed(kSeed, {3}));
    const double x0 = 10.0;
    int cases = 0, agree = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = rng.uniformInt(1, 10);
        DlIndividual dl;
        StIndividual st;
        const bool coarse = rep % 2 == 0;  // quantised weights force strength ties
        for (int i = 0; i < n; ++i) {
            const RuleGene g = randomRule(3, rng);
            dl.rules.push_back(g);
            StRule r{g, {}, 0.0};
            for (auto& w : r.weights) w = coarse ? rng.uniformInt(-2, 2) * 0.01 : rng.uniform01() * 0.2 - 0.1;
            r.variance = coarse ? 0.0 : rng.uniform01() * 0.01;
            st.rules.push_back(r);
        }
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                const State s{x, y};
                cases += 2;
                agree += inferDl(dl, s) == naiveDl(dl.rules, s);
                agree += inferSt(st, s, x0) == naiveSt(st.rules, s, x0);
            }
    }
    report("inference brute force", agree == cases, fmt("%d/%d decisions agree (1000 rulesets x 16 states x 2)", agree, cases));
}

void transitionFidelity() {
    const auto map = GridMap::defaultMap(4);
    bool ok = true;
    std::string detail;
    double worstSum = 0.0;
    for (double p : {0.1, 0.3, 0.5}) {
        FrozenLake env(map, p);
        Rng rng(deriveSeed(kSeed, {4, static_cast<std::uint64_t>(p * 10)}));
        int pairs = 0, rawRejects = 0;
        double minP = 1.0;
        std::vector<double> pvals;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                const State s{x, y};
                if (env.isTerminal(s)) continue;
                for (int a = 0; a < kNumActions; ++a) {
                    const auto model = env.transitionModel(s, actionFromIndex(a));
                    double total = 0.0;
                    for (const auto& t : model) total += t.probability;
                    worstSum = std::max(worstSum, std::abs(total - 1.0));
                    std::map<State, double> expected;
                    for (const auto& t : model) expected[t.next] += t.probability;
                    std::map<State, long> counts;
                    constexpr long kDraws = 100000;
                    for (long i = 0; i < kDraws; ++i) ++counts[env.step(s, actionFromIndex(a), rng).next];
                    bool unexpected = false;
                    for (const auto& [next, c] : counts) unexpected |= !expected.count(next);
                    if (unexpected) {
                        ok = false;
                        continue;
                    }
                    if (expected.size() < 2) continue;
                    double chi2 = 0.0;
                    for (const auto& [next, prob] : expected) {
                        const double e = prob * kDraws;
                        const double o = counts.count(next) ? static_cast<double>(counts[next]) : 0.0;
                        chi2 += (o - e) * (o - e) / e;
                    }
                    boost::math::chi_squared dist(static_cast<double>(expected.size() - 1));
                    const double pv = boost::math::cdf(boost::math::complement(dist, chi2));
                    pvals.push_back(pv);
                    minP = std::min(minP, pv);
                    rawRejects += pv < 0.01;
                    ++pairs;
                }
            }
        // Family-wise level 0.01 over the tested pairs.
        const bool pass = minP >= 0.01 / pairs;
        ok = ok && pass;
        detail += fmt("p=%.1f: %d pairs, min p=%.4f (raw<0.01: %d); ", p, pairs, minP, rawRejects);
    }
    ok = ok && worstSum < 1e-12;
    detail += fmt("max |sum-1|=%.1e", worstSum);
    report("transition-model fidelity", ok, detail);
}

void statistics() {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    const auto exact = mannWhitneyU(a, b);
    Rng rng(deriveSeed(kSeed, {5}));
    int rejects = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> x(30), y(30);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        rejects += mannWhitneyU(x, y).pTwoSided < 0.05;
    }
    const double rate = rejects / 1000.0;
    report("Mann-Whitney U", std::abs(exact.pTwoSided - 0.1) < 1e-12 && rate >= 0.03 && rate <= 0.07,
           fmt("exact p([1,2,3],[4,5,6])=%.6f, null rejection rate at 0.05 (n=30)=%.3f", exact.pTwoSided, rate));
}

void geometricCalibration() {
    bool ok = true;
    std::string detail;
    for (int w : {4, 8, 12}) {
        const int k = w / 2;
        const GeometricMutator mut(w);
        const double closed = 1.0 - std::pow(0.01, 1.0 / k);
        Rng rng(deriveSeed(kSeed, {6, static_cast<std::uint64_t>(w)}));
        long inRange = 0;
        constexpr long kSamples = 1000000;
        for (long i = 0; i < kSamples; ++i) {
            const int m = mut.sampleMagnitude(rng);
            inRange += m >= 1 && m <= k;
        }
        const double frac = static_cast<double>(inRange) / kSamples;
        const double gap = std::abs(mut.p() - closed);
        ok = ok && frac >= 0.99 && gap < 1e-12;
        const double mass = 1.0 - std::pow(1.0 - mut.p(), k);
        detail += fmt("w=%d: p=%.6f (|p-closed|=%.1e) in [1,%d]: %.4f%% (exact mass %.6f%%); ", w, mut.p(), gap, k,
                      frac * 100.0, mass * 100.0);
    }
    report("geometric mutation calibration", ok, detail);
}

}  // namespace

int main() {
    std::printf("lcsbench %s acceptance suite, %d worker(s)\n", std::string(toolVersion()).c_str(), workerCount());
    guarded("oracle exactness", oracleExactness);
    guarded("desk benchmark (4,0)", deterministicBenchmark);
    guarded("stochastic check (4,0.3)", stochasticBenchmark);
    guarded("payoff oracle equivalence", payoffEquivalence);
    guarded("NLMS contraction", nlmsContraction);
    guarded("inference brute force", inferenceEquivalence);
    guarded("transition-model fidelity", transitionFidelity);
    guarded("Mann-Whitney U", statistics);
    guarded("geometric mutation calibration", geometricCalibration);
    std::printf("%s: %d failure(s)\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
