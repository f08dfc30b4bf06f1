#pragma once

#include <cmath>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "usd/povm.hpp"

namespace usd {

/// One inconclusive outcome after splitting A_0 spectrally. Each term
/// lambda |m><m| is a legitimate POVM element of its own.
struct SpectralOutcome {
    double eigenvalue = 0.0;
    StateVector eigenvector;
    std::string label;
};

/// Eigenvalues at or below this fraction of the largest one are treated as
/// zero: the optimum puts A_0 exactly on the positivity boundary, so one
/// eigenvalue is numerically zero and must not spawn a spurious outcome.
inline constexpr double kSpectralCutoff = 1e-10;

/// Spectral decomposition of the inconclusive element into rank-1 outcomes,
/// ordered by decreasing eigenvalue. Returns an empty list when A_0 is
/// numerically zero (every signal is always detected).
inline std::vector<SpectralOutcome> decompose_inconclusive(
    const PovmSet& povm, double relativeCutoff = kSpectralCutoff) {
    const Feasibility feas = is_feasible(povm);
    if (!feas.feasible) {
        throw InvalidInput("decompose_inconclusive: A_0 is not positive "
                           "semidefinite (min eigenvalue " +
                           std::to_string(feas.minEigenvalue) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(povm.inconclusive.matrix);
    const auto& values = solver.eigenvalues();
    const double top = values.maxCoeff();
    std::vector<SpectralOutcome> outcomes;
    if (top < 1e-12) return outcomes;

    for (Eigen::Index i = values.size() - 1; i >= 0; --i) {  // descending
        const double lambda = values(i);
        if (lambda <= relativeCutoff * top) continue;
        Vector vec = solver.eigenvectors().col(i);
        // Fix the arbitrary eigenvector phase: largest component made
        // real positive, so repeated runs and tests agree.
        Eigen::Index pivot = 0;
        vec.cwiseAbs().maxCoeff(&pivot);
        const Complex z = vec(pivot);
        vec *= std::conj(z) / std::abs(z);
        outcomes.push_back(SpectralOutcome{
            lambda, StateVector(std::move(vec)),
            "inconclusive-" + std::to_string(outcomes.size())});
    }
    return outcomes;
}

/// Bayesian view of the inconclusive outcomes: joint probabilities
/// P_mj = p_j lambda_m |<m, u_j>|^2, posteriors Q_jm, and Shannon entropies
/// in nats. The merged fields treat A_0 as a single outcome, which is the
/// other legitimate way an experimenter may bin the failures.
struct PosteriorReport {
    std::vector<SpectralOutcome> outcomes;
    std::vector<std::vector<double>> jointProbabilities;  // [m][j]
    std::vector<std::vector<double>> posteriors;          // [m][j]
    std::vector<double> outcomeEntropies;                 // nats
    double initialEntropy = 0.0;                          // nats
    double inconclusiveProbability = 0.0;
    std::vector<double> mergedPosteriors;
    double mergedEntropy = 0.0;
};

namespace detail {

inline double shannon_entropy(const std::vector<double>& q) {
    double h = 0.0;
    for (double x : q) {
        if (x > 0.0) h -= x * std::log(x);  // 0 ln 0 = 0
    }
    return h;
}

}  // namespace detail

inline PosteriorReport posterior_report(const StateEnsemble& ensemble,
                                        const PovmSet& povm,
                                        double relativeCutoff = kSpectralCutoff) {
    const int n = ensemble.size();
    PosteriorReport report;
    report.initialEntropy = detail::shannon_entropy(ensemble.priors());

    double p0 = 0.0;
    std::vector<double> mergedJoint(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        const Vector& u = ensemble.states()[static_cast<std::size_t>(j)].components();
        const double born = (u.adjoint() * povm.inconclusive.matrix * u)(0).real();
        mergedJoint[static_cast<std::size_t>(j)] =
            ensemble.priors()[static_cast<std::size_t>(j)] * std::max(born, 0.0);
        p0 += mergedJoint[static_cast<std::size_t>(j)];
    }
    report.inconclusiveProbability = p0;
    if (p0 > 0.0) {
        report.mergedPosteriors.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            report.mergedPosteriors[static_cast<std::size_t>(j)] =
                mergedJoint[static_cast<std::size_t>(j)] / p0;
        }
        report.mergedEntropy = detail::shannon_entropy(report.mergedPosteriors);
    }

    for (auto& outcome : decompose_inconclusive(povm, relativeCutoff)) {
        std::vector<double> joint(static_cast<std::size_t>(n));
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            const Complex overlap =
                inner_product(outcome.eigenvector.components(),
                              ensemble.states()[static_cast<std::size_t>(j)].components());
            joint[static_cast<std::size_t>(j)] =
                ensemble.priors()[static_cast<std::size_t>(j)] *
                outcome.eigenvalue * std::norm(overlap);
            total += joint[static_cast<std::size_t>(j)];
        }
        if (total <= 0.0) {
            std::cerr << "warning: outcome " << outcome.label
                      << " can never occur; dropped from the report\n";
            continue;
        }
        std::vector<double> q(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            q[static_cast<std::size_t>(j)] = joint[static_cast<std::size_t>(j)] / total;
        }
        report.outcomeEntropies.push_back(detail::shannon_entropy(q));
        report.jointProbabilities.push_back(std::move(joint));
        report.posteriors.push_back(std::move(q));
        report.outcomes.push_back(std::move(outcome));
    }
    return report;
}

}  // namespace usd
