#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "usd/errors.hpp"

namespace usd {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// States whose norm deviates from 1 by more than this are rejected.
inline constexpr double kNormalizationTolerance = 1e-6;

/// Ensembles whose Gram volume T = |det|^2 falls below this are treated as
/// linearly dependent; beyond this point the dual vectors blow up and the
/// coefficient intercepts exceed ~1e12.
inline constexpr double kIndependenceTolerance = 1e-12;

/// Hermitian inner product, conjugating the first argument:
/// inner_product(a, b) = sum_i conj(a_i) b_i.
inline Complex inner_product(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw InvalidInput("inner_product: dimension mismatch (" +
                           std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()) + ")");
    }
    return a.dot(b);
}

/// A normalized pure state. Construction enforces unit norm within
/// `tolerance` and then rescales exactly, so the stored components satisfy
/// the normalization to machine precision.
class StateVector {
  public:
    explicit StateVector(Vector components,
                         double tolerance = kNormalizationTolerance)
        : components_(std::move(components)) {
        if (components_.size() == 0) {
            throw InvalidInput("state vector has no components");
        }
        const double norm = components_.norm();
        if (norm < 1e-15) {
            throw InvalidInput("state vector is numerically zero");
        }
        if (std::abs(norm - 1.0) > tolerance) {
            throw InvalidInput("state vector norm " + std::to_string(norm) +
                               " deviates from 1 beyond tolerance " +
                               std::to_string(tolerance));
        }
        components_ /= norm;
    }

    const Vector& components() const { return components_; }
    Eigen::Index dimension() const { return components_.size(); }

  private:
    Vector components_;
};

/// The discrimination problem: N linearly independent signal states living
/// in an N-dimensional space, their prior probabilities and their detection
/// values. Immutable after construction.
class StateEnsemble {
  public:
    StateEnsemble(std::vector<StateVector> states,
                  std::vector<double> priors = {},
                  std::vector<double> values = {})
        : states_(std::move(states)),
          priors_(std::move(priors)),
          values_(std::move(values)) {
        const std::size_t n = states_.size();
        if (n == 0) throw InvalidInput("ensemble has no states");
        for (std::size_t j = 0; j < n; ++j) {
            if (states_[j].dimension() != static_cast<Eigen::Index>(n)) {
                throw InvalidInput(
                    "states[" + std::to_string(j) + "] has dimension " +
                    std::to_string(states_[j].dimension()) +
                    "; expected " + std::to_string(n) +
                    " (the problem must be square)");
            }
        }
        if (priors_.empty()) {
            priors_.assign(n, 1.0 / static_cast<double>(n));
        }
        if (priors_.size() != n) {
            throw InvalidInput("priors has " + std::to_string(priors_.size()) +
                               " entries; expected " + std::to_string(n));
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(priors_[j] > 0.0)) {
                throw InvalidInput("priors[" + std::to_string(j) +
                                   "] must be > 0");
            }
            sum += priors_[j];
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw InvalidInput("priors sum to " + std::to_string(sum) +
                               "; expected 1 within 1e-12");
        }
        if (values_.empty()) {
            values_.assign(n, 1.0);
        }
        if (values_.size() != n) {
            throw InvalidInput("values has " + std::to_string(values_.size()) +
                               " entries; expected " + std::to_string(n));
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (values_[j] < 0.0) {
                throw InvalidInput("values[" + std::to_string(j) +
                                   "] must be non-negative");
            }
        }
        // Linear independence gate; without it no detector can be built.
        const Complex det = component_matrix().determinant();
        if (std::norm(det) < kIndependenceTolerance) {
            throw LinearDependenceError(
                "signal states are linearly dependent (Gram volume " +
                std::to_string(std::norm(det)) + " below tolerance)");
        }
    }

    int size() const { return static_cast<int>(states_.size()); }
    const std::vector<StateVector>& states() const { return states_; }
    const std::vector<double>& priors() const { return priors_; }
    const std::vector<double>& values() const { return values_; }

    /// Matrix whose row j holds the components of state j.
    Matrix component_matrix() const {
        const int n = size();
        Matrix m(n, n);
        for (int j = 0; j < n; ++j) m.row(j) = states_[j].components();
        return m;
    }

  private:
    std::vector<StateVector> states_;
    std::vector<double> priors_;
    std::vector<double> values_;
};

/// Pairwise overlaps s_ij = <u_i, u_j>, the determinant D of the
/// state-component matrix, and the Gram volume T = |D|^2.
struct GramData {
    Matrix overlaps;
    Complex determinant;
    double gramVolume = 0.0;
};

inline GramData gram_data(const StateEnsemble& ensemble) {
    const int n = ensemble.size();
    GramData g;
    g.overlaps.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            g.overlaps(i, j) = inner_product(ensemble.states()[i].components(),
                                             ensemble.states()[j].components());
        }
    }
    g.determinant = ensemble.component_matrix().determinant();
    g.gramVolume = std::norm(g.determinant);
    return g;
}

/// The unnormalized dual (reciprocal) vectors v_j, biorthogonal to the
/// signal states: <u_i, v_j> = delta_ij * D.
struct DualSystem {
    std::vector<Vector> duals;
    GramData gram;

    double norm_squared(int j) const { return duals[static_cast<std::size_t>(j)].squaredNorm(); }
    std::vector<double> norms_squared() const {
        std::vector<double> out(duals.size());
        for (std::size_t j = 0; j < duals.size(); ++j) out[j] = duals[j].squaredNorm();
        return out;
    }
};

/// Builds the dual vectors. With U the state-component matrix (rows are
/// states), v_j = D * conj(column j of U^-1); the inverse supplies all the
/// row cofactors in one O(N^3) solve. For N = 3 this reduces to conjugated
/// cross products of the other two states (up to the phase of D).
inline DualSystem dual_vectors(const StateEnsemble& ensemble) {
    DualSystem sys;
    sys.gram = gram_data(ensemble);
    if (sys.gram.gramVolume < kIndependenceTolerance) {
        throw LinearDependenceError(
            "signal states are linearly dependent; cannot build duals");
    }
    const int n = ensemble.size();
    const Matrix inverse = ensemble.component_matrix().inverse();
    sys.duals.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        sys.duals.push_back(sys.gram.determinant * inverse.col(j).conjugate());
    }
    return sys;
}

/// Named parameters of the three-state canonical form
/// u1 = (1, 0, 0), u2 = (a2, b2, 0), u3 = (a3, b3 e^{i beta}, c3),
/// with a2, a3, b3 >= 0 and b2, c3 > 0.
struct CanonicalParameters {
    double a2 = 0.0;
    double b2 = 0.0;
    double a3 = 0.0;
    double b3 = 0.0;
    double beta = 0.0;
    double c3 = 0.0;
};

/// Result of the triangular basis reduction. `reducedStates[j]` has zero
/// components beyond position j and a positive real component at position j;
/// all pairwise overlaps equal those of the input ensemble.
struct CanonicalForm {
    std::vector<StateVector> reducedStates;
    std::optional<CanonicalParameters> parameters;  // N == 3 only
};

/// Gram-Schmidt reduction of the ensemble onto a basis adapted to the
/// states. The basis phases are fixed by requiring each new diagonal
/// coefficient to be real and positive, which makes the reduction unique
/// and idempotent. The named N = 3 parameters additionally absorb the free
/// state phases so that a2 and a3 come out real non-negative.
inline CanonicalForm canonical_reduce(const StateEnsemble& ensemble) {
    const int n = ensemble.size();
    std::vector<Vector> basis;
    basis.reserve(static_cast<std::size_t>(n));
    Matrix r = Matrix::Zero(n, n);  // r(j, k) = <e_k, u_j>

    for (int j = 0; j < n; ++j) {
        Vector w = ensemble.states()[static_cast<std::size_t>(j)].components();
        for (int k = 0; k < j; ++k) {
            r(j, k) = inner_product(basis[static_cast<std::size_t>(k)], w);
            w -= r(j, k) * basis[static_cast<std::size_t>(k)];
        }
        const double residual = w.norm();
        if (residual < 1e-9) {
            throw LinearDependenceError(
                "canonical_reduce: state " + std::to_string(j) +
                " is numerically dependent on its predecessors");
        }
        r(j, j) = residual;
        basis.push_back(w / residual);
    }

    CanonicalForm form;
    form.reducedStates.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        Vector reduced = Vector::Zero(n);
        for (int k = 0; k <= j; ++k) reduced(k) = r(j, k);
        form.reducedStates.emplace_back(std::move(reduced));
    }

    if (n == 3) {
        CanonicalParameters p;
        p.a2 = std::abs(r(1, 0));
        p.b2 = r(1, 1).real();
        p.a3 = std::abs(r(2, 0));
        p.b3 = std::abs(r(2, 1));
        p.c3 = r(2, 2).real();
        // arg convention: arg(0) = 0, so degenerate overlaps give beta = 0.
        auto arg0 = [](Complex z) { return std::abs(z) == 0.0 ? 0.0 : std::arg(z); };
        p.beta = arg0(r(2, 1)) - arg0(r(2, 0)) + arg0(r(1, 0));
        while (p.beta > M_PI) p.beta -= 2.0 * M_PI;
        while (p.beta <= -M_PI) p.beta += 2.0 * M_PI;
        if (p.b3 == 0.0) p.beta = 0.0;
        form.parameters = p;
    }
    return form;
}

}  // namespace usd
