#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "usd/linalg.hpp"

namespace usd {

/// Optimal coefficients sit exactly on the positivity boundary, so the
/// feasibility test must admit eigenvalues this far below zero.
inline constexpr double kPsdTolerance = 1e-9;

/// Non-negative weights k_j of the rank-1 detector elements.
struct CoefficientVector {
    std::vector<double> k;

    explicit CoefficientVector(std::vector<double> values) : k(std::move(values)) {
        for (std::size_t j = 0; j < k.size(); ++j) {
            if (k[j] < 0.0) {
                throw InvalidInput("coefficient k[" + std::to_string(j) +
                                   "] = " + std::to_string(k[j]) +
                                   " is negative");
            }
        }
    }

    int size() const { return static_cast<int>(k.size()); }
};

/// One measurement operator. Hermiticity is enforced on construction;
/// positive semidefiniteness of the inconclusive element is a property of
/// the coefficients and is checked separately via is_feasible.
struct PovmElement {
    Matrix matrix;

    explicit PovmElement(Matrix m) : matrix(std::move(m)) {
        const double asym = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
        if (asym > 1e-12) {
            throw InternalConsistencyError(
                "POVM element deviates from Hermitian by " + std::to_string(asym));
        }
        matrix = 0.5 * (matrix + matrix.adjoint().eval());
    }
};

/// The full measurement {A_1..A_N, A_0}: N rank-1 detectors plus the
/// inconclusive element that absorbs the rest of the identity.
struct PovmSet {
    std::vector<PovmElement> detectors;
    PovmElement inconclusive;
    CoefficientVector coefficients;
};

namespace detail {

/// Smallest eigenvalue of a Hermitian matrix.
inline double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

inline Matrix inconclusive_matrix(const DualSystem& duals,
                                  const std::vector<double>& k) {
    const Eigen::Index n = duals.duals[0].size();
    Matrix a0 = Matrix::Identity(n, n);
    for (std::size_t j = 0; j < duals.duals.size(); ++j) {
        a0 -= k[j] * (duals.duals[j] * duals.duals[j].adjoint());
    }
    return a0;
}

}  // namespace detail

/// Assembles A_j = k_j |v_j><v_j| and A_0 = 1 - sum_j A_j. Completeness
/// holds by construction; A_0 need not be positive for arbitrary k.
inline PovmSet build_povm(const DualSystem& duals, const CoefficientVector& k) {
    const int n = static_cast<int>(duals.duals.size());
    if (k.size() != n) {
        throw InvalidInput("build_povm: coefficient count " +
                           std::to_string(k.size()) + " does not match " +
                           std::to_string(n) + " duals");
    }
    std::vector<PovmElement> detectors;
    detectors.reserve(static_cast<std::size_t>(n));
    Matrix a0 = Matrix::Identity(n, n);
    for (int j = 0; j < n; ++j) {
        Matrix aj = k.k[static_cast<std::size_t>(j)] *
                    (duals.duals[static_cast<std::size_t>(j)] *
                     duals.duals[static_cast<std::size_t>(j)].adjoint());
        a0 -= aj;
        detectors.emplace_back(std::move(aj));
    }
    return PovmSet{std::move(detectors), PovmElement(std::move(a0)), k};
}

/// det(A_0), computed directly from the matrix for any N.
inline double det_inconclusive(const DualSystem& duals,
                               const CoefficientVector& k) {
    if (k.size() != static_cast<int>(duals.duals.size())) {
        throw InvalidInput("det_inconclusive: dimension mismatch");
    }
    const Complex det = detail::inconclusive_matrix(duals, k.k).determinant();
    if (std::abs(det.imag()) > 1e-9 * (1.0 + std::abs(det.real()))) {
        throw InternalConsistencyError(
            "det(A_0) has a non-negligible imaginary part: " +
            std::to_string(det.imag()));
    }
    return det.real();
}

/// Closed-form det(A_0) for three states:
/// 1 - sum_j |v_j|^2 k_j + T (k1 k2 + k2 k3 + k3 k1) - T^2 k1 k2 k3.
/// Kept as an independent algebraic route against the direct determinant.
inline double det_inconclusive_closed3(const DualSystem& duals,
                                       const CoefficientVector& k) {
    if (duals.duals.size() != 3 || k.size() != 3) {
        throw DimensionError("det_inconclusive_closed3 requires exactly 3 states");
    }
    const double t = duals.gram.gramVolume;
    const double k1 = k.k[0], k2 = k.k[1], k3 = k.k[2];
    return 1.0 - duals.norm_squared(0) * k1 - duals.norm_squared(1) * k2 -
           duals.norm_squared(2) * k3 + t * (k1 * k2 + k2 * k3 + k3 * k1) -
           t * t * k1 * k2 * k3;
}

/// Positivity verdict for A_0 with the minimum eigenvalue as witness.
struct Feasibility {
    bool feasible = false;
    double minEigenvalue = 0.0;
};

/// Full positive-semidefiniteness check of the inconclusive element. The
/// determinant condition alone only bounds the relevant sheet of the
/// boundary; the eigenvalue test covers every principal minor at once and
/// yields a quantitative witness.
inline Feasibility is_feasible(const PovmSet& povm, double tol = kPsdTolerance) {
    const double lo = detail::min_eigenvalue(povm.inconclusive.matrix);
    return Feasibility{lo >= -tol, lo};
}

/// Conditional detection probabilities P_j = k_j T (given that signal j was
/// sent) and the prior-averaged inconclusive probability P_0.
struct OutcomeProbabilities {
    std::vector<double> detection;
    double inconclusive = 0.0;
};

/// Evaluates the outcome statistics of a feasible measurement, checking the
/// closed forms against the general Born rule <u_i, A_j u_i>: the
/// off-diagonal (cross-detection) probabilities must vanish and the diagonal
/// must reproduce k_j T. A mismatch indicates a broken dual-vector
/// convention and is reported as an internal error.
inline OutcomeProbabilities outcome_probabilities(const StateEnsemble& ensemble,
                                                  const DualSystem& duals,
                                                  const CoefficientVector& k) {
    const int n = ensemble.size();
    if (k.size() != n || static_cast<int>(duals.duals.size()) != n) {
        throw InvalidInput("outcome_probabilities: dimension mismatch");
    }
    const PovmSet povm = build_povm(duals, k);
    const Feasibility feas = is_feasible(povm);
    if (!feas.feasible) {
        throw InvalidInput(
            "coefficients are infeasible (min eigenvalue of A_0 = " +
            std::to_string(feas.minEigenvalue) + ")");
    }
    const double t = duals.gram.gramVolume;
    OutcomeProbabilities out;
    out.detection.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Vector& u = ensemble.states()[static_cast<std::size_t>(i)].components();
        for (int j = 0; j < n; ++j) {
            const double born =
                (u.adjoint() * povm.detectors[static_cast<std::size_t>(j)].matrix * u)(0).real();
            if (i == j) {
                const double closed = k.k[static_cast<std::size_t>(j)] * t;
                if (std::abs(born - closed) > 1e-8) {
                    throw InternalConsistencyError(
                        "detection probability mismatch for signal " +
                        std::to_string(j) + ": Born " + std::to_string(born) +
                        " vs closed form " + std::to_string(closed));
                }
                out.detection[static_cast<std::size_t>(j)] = closed;
            } else if (std::abs(born) > 1e-10) {
                throw InternalConsistencyError(
                    "cross-detection probability " + std::to_string(born) +
                    " for input " + std::to_string(i) + ", outcome " +
                    std::to_string(j));
            }
        }
    }
    double weighted = 0.0;
    for (int j = 0; j < n; ++j) {
        weighted += ensemble.priors()[static_cast<std::size_t>(j)] *
                    k.k[static_cast<std::size_t>(j)];
    }
    out.inconclusive = 1.0 - t * weighted;
    return out;
}

}  // namespace usd
