#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "usd/posterior.hpp"
#include "usd/povm.hpp"

namespace usd {
namespace rng {

/// SplitMix64 output function.
inline std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Counter-based uniform draw in [0, 1): the value depends only on
/// (seed, counter), so serial and parallel trial orders produce identical
/// streams bit for bit.
inline double uniform(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t z =
        mix(seed + (counter + 1) * 0x9e3779b97f4a7c15ull);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace rng

struct SimulationConfig {
    std::uint64_t trials = 100000;
    std::uint64_t seed = 0;
    bool splitInconclusive = false;
};

/// Empirical outcome statistics of a seeded measurement run. `counts[i][m]`
/// is the number of trials in which signal i was sent and outcome m
/// observed; outcomes are the N detectors followed by the inconclusive
/// outcome(s).
struct SimulationReport {
    std::vector<std::string> outcomeLabels;
    std::vector<std::vector<std::uint64_t>> counts;
    double empiricalInconclusive = 0.0;
    double analyticInconclusive = 0.0;
    double maxDeviation = 0.0;       // largest |empirical - analytic| joint cell
    double standardErrorBound = 0.0; // 3x the largest per-cell binomial SE
    std::uint64_t misidentifications = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    bool splitInconclusive = false;
};

/// Draws `trials` signals from the priors, measures each with the POVM via
/// the Born rule, and compares empirical frequencies against the analytic
/// cell probabilities. Deterministic for a fixed config.
inline SimulationReport run_simulation(const StateEnsemble& ensemble,
                                       const PovmSet& povm,
                                       const SimulationConfig& config) {
    if (config.trials < 1) throw InvalidInput("run_simulation: trials must be >= 1");
    const Feasibility feas = is_feasible(povm);
    if (!feas.feasible) {
        throw InvalidInput("run_simulation: POVM is infeasible (min eigenvalue " +
                           std::to_string(feas.minEigenvalue) + ")");
    }
    const int n = ensemble.size();

    // Outcome operators: the N detectors, then A_0 either whole or split
    // into its spectral pieces.
    std::vector<Matrix> operators;
    SimulationReport report;
    report.trials = config.trials;
    report.seed = config.seed;
    report.splitInconclusive = config.splitInconclusive;
    for (int j = 0; j < n; ++j) {
        operators.push_back(povm.detectors[static_cast<std::size_t>(j)].matrix);
        report.outcomeLabels.push_back("detector-" + std::to_string(j));
    }
    if (config.splitInconclusive) {
        for (const auto& outcome : decompose_inconclusive(povm)) {
            operators.push_back(outcome.eigenvalue *
                                outcome.eigenvector.components() *
                                outcome.eigenvector.components().adjoint());
            report.outcomeLabels.push_back(outcome.label);
        }
    } else {
        operators.push_back(povm.inconclusive.matrix);
        report.outcomeLabels.push_back("inconclusive");
    }
    const std::size_t outcomes = operators.size();

    // Born probabilities per input, with boundary round-off clipped.
    std::vector<std::vector<double>> born(
        static_cast<std::size_t>(n), std::vector<double>(outcomes, 0.0));
    for (int i = 0; i < n; ++i) {
        const Vector& u = ensemble.states()[static_cast<std::size_t>(i)].components();
        double sum = 0.0;
        for (std::size_t m = 0; m < outcomes; ++m) {
            double p = (u.adjoint() * operators[m] * u)(0).real();
            if (p < 0.0) {
                if (p < -1e-9) {
                    throw InvalidInput(
                        "run_simulation: outcome probability " + std::to_string(p) +
                        " for input " + std::to_string(i) + " is negative");
                }
                p = 0.0;
            }
            born[static_cast<std::size_t>(i)][m] = p;
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw InvalidInput("run_simulation: outcome probabilities for input " +
                               std::to_string(i) + " sum to " + std::to_string(sum));
        }
        for (auto& p : born[static_cast<std::size_t>(i)]) p /= sum;
    }

    std::vector<double> priorCdf(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += ensemble.priors()[static_cast<std::size_t>(i)];
        priorCdf[static_cast<std::size_t>(i)] = acc;
    }

    report.counts.assign(static_cast<std::size_t>(n),
                         std::vector<std::uint64_t>(outcomes, 0));
    for (std::uint64_t trial = 0; trial < config.trials; ++trial) {
        const double u1 = rng::uniform(config.seed, 2 * trial);
        int input = n - 1;
        for (int i = 0; i < n; ++i) {
            if (u1 < priorCdf[static_cast<std::size_t>(i)]) {
                input = i;
                break;
            }
        }
        const double u2 = rng::uniform(config.seed, 2 * trial + 1);
        std::size_t outcome = outcomes - 1;
        double cdf = 0.0;
        for (std::size_t m = 0; m < outcomes; ++m) {
            cdf += born[static_cast<std::size_t>(input)][m];
            if (u2 < cdf) {
                outcome = m;
                break;
            }
        }
        ++report.counts[static_cast<std::size_t>(input)][outcome];
        if (outcome < static_cast<std::size_t>(n) &&
            outcome != static_cast<std::size_t>(input)) {
            ++report.misidentifications;
        }
    }

    const double invTrials = 1.0 / static_cast<double>(config.trials);
    double inconclusiveAnalytic = 0.0;
    double inconclusiveEmpirical = 0.0;
    for (int i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < outcomes; ++m) {
            const double cell = ensemble.priors()[static_cast<std::size_t>(i)] *
                                born[static_cast<std::size_t>(i)][m];
            const double freq =
                static_cast<double>(report.counts[static_cast<std::size_t>(i)][m]) *
                invTrials;
            report.maxDeviation = std::max(report.maxDeviation, std::abs(freq - cell));
            report.standardErrorBound =
                std::max(report.standardErrorBound,
                         3.0 * std::sqrt(cell * (1.0 - cell) * invTrials));
            if (m >= static_cast<std::size_t>(n)) {
                inconclusiveAnalytic += cell;
                inconclusiveEmpirical += freq;
            }
        }
    }
    report.analyticInconclusive = inconclusiveAnalytic;
    report.empiricalInconclusive = inconclusiveEmpirical;
    return report;
}

}  // namespace usd
