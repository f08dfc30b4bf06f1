#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "usd/povm.hpp"

namespace usd {

/// Linear gain weights b_j = C_j p_j of the objective G = T sum_j b_j k_j.
struct GainWeights {
    std::vector<double> b;

    explicit GainWeights(std::vector<double> weights) : b(std::move(weights)) {
        bool anyPositive = false;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (b[j] < 0.0) {
                throw InvalidInput("gain weight b[" + std::to_string(j) +
                                   "] is negative");
            }
            anyPositive = anyPositive || b[j] > 0.0;
        }
        if (!anyPositive) {
            throw InvalidInput("all gain weights vanish; nothing to maximize");
        }
    }

    static GainWeights from_ensemble(const StateEnsemble& ensemble) {
        std::vector<double> b(static_cast<std::size_t>(ensemble.size()));
        for (std::size_t j = 0; j < b.size(); ++j) {
            b[j] = ensemble.values()[j] * ensemble.priors()[j];
        }
        return GainWeights(std::move(b));
    }
};

/// An optimal (or grid-searched) coefficient assignment together with its
/// gain, failure probability and boundary diagnostics.
struct Solution {
    CoefficientVector k;
    double gain = 0.0;
    double inconclusiveProbability = 0.0;
    std::vector<int> activeFace;  // indices with k_j clamped to zero (0-based)
    bool boundaryContact = false;
    double minEigenvalue = 0.0;
};

/// Points on the det(A_0) = 0 surface inside the non-negative octant,
/// suitable for plotting the positivity domain of a three-state problem.
struct SurfaceSample {
    std::vector<std::array<double, 3>> points;
};

namespace detail {

// det(A_0) restricted to a subset of coefficients, evaluated on the dual
// Gram block alone: det(I_N - sum_f k_f |v_f><v_f|) = det(I_m - K G) with
// G_fl = <v_f, v_l>. Exact for any k, and O(m^3) instead of O(N^3).
inline double det_gram_restricted(const Matrix& gram,
                                  const std::vector<double>& k) {
    const Eigen::Index m = gram.rows();
    Matrix a = Matrix::Identity(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        a.row(i) -= k[static_cast<std::size_t>(i)] * gram.row(i);
    }
    return a.determinant().real();
}

// Connected components of the dual overlap graph. When the duals split
// into mutually orthogonal groups, A_0 block-diagonalizes and the
// optimization separates exactly; solving per block is what recovers
// boundary points where several eigenvalues vanish at once (there the
// gradient of the full determinant vanishes and a joint tangency solve is
// degenerate).
inline std::vector<std::vector<int>> gram_blocks(const Matrix& gram,
                                                 double tol = 1e-12) {
    const int m = static_cast<int>(gram.rows());
    std::vector<bool> seen(static_cast<std::size_t>(m), false);
    std::vector<std::vector<int>> blocks;
    for (int s = 0; s < m; ++s) {
        if (seen[static_cast<std::size_t>(s)]) continue;
        std::vector<int> block;
        std::vector<int> stack{s};
        seen[static_cast<std::size_t>(s)] = true;
        while (!stack.empty()) {
            const int a = stack.back();
            stack.pop_back();
            block.push_back(a);
            for (int c = 0; c < m; ++c) {
                if (seen[static_cast<std::size_t>(c)]) continue;
                const double scale = std::sqrt(gram(a, a).real() * gram(c, c).real());
                if (std::abs(gram(a, c)) > tol * scale) {
                    seen[static_cast<std::size_t>(c)] = true;
                    stack.push_back(c);
                }
            }
        }
        std::sort(block.begin(), block.end());
        blocks.push_back(std::move(block));
    }
    return blocks;
}

inline void dedupe_candidates(std::vector<std::vector<double>>& cands) {
    std::vector<std::vector<double>> unique;
    for (const auto& k : cands) {
        double scale = 1.0;
        for (double x : k) scale = std::max(scale, std::abs(x));
        bool dup = false;
        for (const auto& u : unique) {
            double d = 0.0;
            for (std::size_t i = 0; i < k.size(); ++i) {
                d = std::max(d, std::abs(k[i] - u[i]));
            }
            if (d < 1e-8 * scale) {
                dup = true;
                break;
            }
        }
        if (!dup) unique.push_back(k);
    }
    cands = std::move(unique);
}

// One free coefficient: the boundary is the axis intercept 1/|v|^2.
inline std::vector<std::vector<double>> solve_block1(const Matrix& gram) {
    return {{1.0 / gram(0, 0).real()}};
}

// Two free coefficients: the restricted boundary is the bilinear curve
// 1 - g11 k1 - g22 k2 + M k1 k2 = 0 with M = g11 g22 - |g12|^2, and the
// parallel-gradient condition untangles into the closed form
//   k1 = (g22 -+ r sqrt(b2/b1)) / M,  k2 = (g11 -+ r sqrt(b1/b2)) / M,
// r = |g12|. The minus pair is the near sheet, the plus pair the far one.
inline std::vector<std::vector<double>> solve_block2(const Matrix& gram,
                                                     const std::vector<double>& b) {
    const double g11 = gram(0, 0).real();
    const double g22 = gram(1, 1).real();
    const double r = std::abs(gram(0, 1));
    const double m = g11 * g22 - r * r;
    if (m <= 0.0) return {};
    std::vector<std::vector<double>> out;
    for (double s : {-1.0, 1.0}) {
        out.push_back({(g22 + s * r * std::sqrt(b[1] / b[0])) / m,
                       (g11 + s * r * std::sqrt(b[0] / b[1])) / m});
    }
    return out;
}

// Three free coefficients. The restricted determinant is the cubic
//   det = 1 - sum_j g_jj k_j + sum_{i<j} M_ij k_i k_j - detG k1 k2 k3,
// M_ij = g_ii g_jj - |g_ij|^2. In the scaled variables
//   x_j = 1 - (detG / M_comp(j)) k_j   (comp(j) = the pair excluding j)
// each parallel-gradient condition collapses to a product equation,
//   x2 x3 = q1(mu), x1 x3 = q2(mu), x1 x2 = q3(mu),
//   q_j(mu) = 1 - (g_jj + mu b_j) / alpha_j,
// so x is determined by the multiplier mu up to one overall sign, and the
// boundary condition becomes a scalar root-find det(k(mu)) = 0. The sweep
// is split at the poles q_j = 0 and bracketed roots are bisected, which is
// far more robust than a joint Newton solve from guessed starts.
inline std::vector<std::vector<double>> solve_block3(const Matrix& gram,
                                                     const std::vector<double>& b) {
    const double g1 = gram(0, 0).real(), g2 = gram(1, 1).real(), g3 = gram(2, 2).real();
    const double m12 = g1 * g2 - std::norm(gram(0, 1));
    const double m13 = g1 * g3 - std::norm(gram(0, 2));
    const double m23 = g2 * g3 - std::norm(gram(1, 2));
    Matrix g3x3 = gram;
    const double detg = g3x3.determinant().real();
    if (detg <= 0.0 || m12 <= 0.0 || m13 <= 0.0 || m23 <= 0.0) return {};

    const std::array<double, 3> g{g1, g2, g3};
    const std::array<double, 3> alpha{m12 * m13 / detg, m12 * m23 / detg,
                                      m13 * m23 / detg};
    const std::array<double, 3> t{detg / m23, detg / m13, detg / m12};

    auto coefficients = [&](double mu, double sign,
                            std::vector<double>& k) -> bool {
        std::array<double, 3> q;
        for (int j = 0; j < 3; ++j) {
            q[static_cast<std::size_t>(j)] =
                1.0 - (g[static_cast<std::size_t>(j)] +
                       mu * b[static_cast<std::size_t>(j)]) /
                          alpha[static_cast<std::size_t>(j)];
        }
        const double prod = q[0] * q[1] * q[2];
        if (prod < 0.0) return false;
        for (double qj : q) {
            if (std::abs(qj) < 1e-300) return false;
        }
        const double p = sign * std::sqrt(prod);
        for (int j = 0; j < 3; ++j) {
            const double x = p / q[static_cast<std::size_t>(j)];
            k[static_cast<std::size_t>(j)] = (1.0 - x) / t[static_cast<std::size_t>(j)];
        }
        return true;
    };

    std::vector<double> k(3);
    auto residual = [&](double mu, double sign, double& value) -> bool {
        if (!coefficients(mu, sign, k)) return false;
        value = det_gram_restricted(gram, k);
        return true;
    };

    // Sweep range generous enough to cover any tangency multiplier.
    double gradBound = std::max({g1, g2, g3});
    const double maxInter = std::max({1.0 / g1, 1.0 / g2, 1.0 / g3});
    gradBound += 3.0 * std::max({m12, m13, m23}) * maxInter + std::abs(detg);
    double minB = std::numeric_limits<double>::max();
    for (double bj : b) minB = std::min(minB, bj);
    std::vector<double> breaks{0.0};
    double lo = -4.0 * gradBound / minB - 10.0;
    for (int j = 0; j < 3; ++j) {
        const double pole = (alpha[static_cast<std::size_t>(j)] -
                             g[static_cast<std::size_t>(j)]) /
                            b[static_cast<std::size_t>(j)];
        lo = std::min(lo, 4.0 * pole - 10.0);
        if (pole < 0.0) breaks.push_back(pole);
    }
    breaks.push_back(lo);
    std::sort(breaks.begin(), breaks.end());

    std::vector<std::vector<double>> roots;
    constexpr int kGridPoints = 240;
    for (double sign : {-1.0, 1.0}) {
        for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
            const double a = breaks[seg] + 1e-12 * (breaks[seg + 1] - breaks[seg]);
            const double c = breaks[seg + 1] - 1e-12 * (breaks[seg + 1] - breaks[seg]);
            double prevMu = 0.0, prevVal = 0.0;
            bool havePrev = false;
            for (int i = 0; i < kGridPoints; ++i) {
                const double mu = a + (c - a) * i / (kGridPoints - 1);
                double val;
                if (!residual(mu, sign, val)) {
                    havePrev = false;
                    continue;
                }
                if (havePrev && prevVal * val <= 0.0 && (prevVal != 0.0 || val != 0.0)) {
                    double x0 = prevMu, x1 = mu, f0 = prevVal;
                    for (int it = 0; it < 120; ++it) {
                        const double mid = 0.5 * (x0 + x1);
                        double fm;
                        if (!residual(mid, sign, fm)) break;
                        if (f0 * fm <= 0.0) {
                            x1 = mid;
                        } else {
                            x0 = mid;
                            f0 = fm;
                        }
                    }
                    if (coefficients(0.5 * (x0 + x1), sign, k)) roots.push_back(k);
                }
                prevMu = mu;
                prevVal = val;
                havePrev = true;
            }
        }
    }
    dedupe_candidates(roots);
    return roots;
}

// Damped Newton on {grad det - mu b, det} with a finite-difference
// Jacobian, from the centroid of the intercept box plus its corners scaled
// by one half. Used for blocks of four or more free coefficients and as an
// extra net under the three-variable sweep.
inline std::vector<std::vector<double>> solve_newton(const Matrix& gram,
                                                     const std::vector<double>& b) {
    const int m = static_cast<int>(gram.rows());
    const std::size_t mu = static_cast<std::size_t>(m);  // index of the multiplier
    std::vector<double> intercepts(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        intercepts[static_cast<std::size_t>(j)] = 1.0 / gram(j, j).real();
    }

    auto det = [&](const std::vector<double>& k) {
        return det_gram_restricted(gram, k);
    };
    auto residual = [&](const std::vector<double>& z, std::vector<double>& r) {
        std::vector<double> k(z.begin(), z.begin() + m);
        const double h = 1e-6;
        for (int j = 0; j < m; ++j) {
            k[static_cast<std::size_t>(j)] += h;
            const double up = det(k);
            k[static_cast<std::size_t>(j)] -= 2.0 * h;
            const double down = det(k);
            k[static_cast<std::size_t>(j)] += h;
            r[static_cast<std::size_t>(j)] =
                (up - down) / (2.0 * h) - z[mu] * b[static_cast<std::size_t>(j)];
        }
        r[mu] = det(k);
    };

    std::vector<std::vector<double>> starts;
    {
        std::vector<double> centroid(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            centroid[static_cast<std::size_t>(j)] =
                0.5 * intercepts[static_cast<std::size_t>(j)];
        }
        starts.push_back(centroid);
        for (unsigned mask = 0; mask < (1u << m); ++mask) {
            std::vector<double> corner(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) {
                corner[static_cast<std::size_t>(j)] =
                    (mask >> j) & 1u ? 0.5 * intercepts[static_cast<std::size_t>(j)]
                                     : 0.0;
            }
            starts.push_back(corner);
        }
    }

    std::vector<std::vector<double>> sols;
    std::vector<double> r(static_cast<std::size_t>(m) + 1);
    std::vector<double> rTrial(static_cast<std::size_t>(m) + 1);
    for (const auto& start : starts) {
        std::vector<double> z(start);
        z.push_back(-1.0);
        auto normOf = [&](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x * x;
            return std::sqrt(s);
        };
        bool converged = false;
        for (int it = 0; it < 100; ++it) {
            residual(z, r);
            if (normOf(r) < 1e-12) {
                converged = true;
                break;
            }
            Eigen::MatrixXd jac(m + 1, m + 1);
            const double h = 1e-6;
            for (int c = 0; c <= m; ++c) {
                std::vector<double> zp = z, zm = z;
                zp[static_cast<std::size_t>(c)] += h;
                zm[static_cast<std::size_t>(c)] -= h;
                std::vector<double> rp(r.size()), rm(r.size());
                residual(zp, rp);
                residual(zm, rm);
                for (int row = 0; row <= m; ++row) {
                    jac(row, c) = (rp[static_cast<std::size_t>(row)] -
                                   rm[static_cast<std::size_t>(row)]) /
                                  (2.0 * h);
                }
            }
            Eigen::VectorXd rhs(m + 1);
            for (int row = 0; row <= m; ++row) rhs(row) = -r[static_cast<std::size_t>(row)];
            Eigen::VectorXd step = jac.fullPivLu().solve(rhs);
            if (!step.allFinite()) break;
            double lambda = 1.0;
            const double base = normOf(r);
            for (int half = 0; half < 30; ++half) {
                std::vector<double> zTrial = z;
                for (int c = 0; c <= m; ++c) {
                    zTrial[static_cast<std::size_t>(c)] += lambda * step(c);
                }
                residual(zTrial, rTrial);
                if (normOf(rTrial) < base) {
                    z = zTrial;
                    break;
                }
                lambda *= 0.5;
                if (half == 29) z = zTrial;
            }
        }
        if (converged) sols.emplace_back(z.begin(), z.begin() + m);
    }
    dedupe_candidates(sols);
    return sols;
}

inline std::vector<std::vector<double>> solve_block(const Matrix& gram,
                                                    const std::vector<double>& b) {
    const int m = static_cast<int>(gram.rows());
    std::vector<std::vector<double>> out;
    if (m == 1) {
        out = solve_block1(gram);
    } else if (m == 2) {
        out = solve_block2(gram, b);
    } else if (m == 3) {
        out = solve_block3(gram, b);
        auto extra = solve_newton(gram, b);
        out.insert(out.end(), extra.begin(), extra.end());
    } else {
        out = solve_newton(gram, b);
    }
    std::vector<std::vector<double>> positive;
    for (auto& k : out) {
        if (std::all_of(k.begin(), k.end(), [](double x) { return x > 0.0; })) {
            positive.push_back(std::move(k));
        }
    }
    dedupe_candidates(positive);
    return positive;
}

struct HotFeasibility {
    std::vector<Matrix> outers;  // |v_j><v_j|
    Eigen::SelfAdjointEigenSolver<Matrix> solver;
    Matrix scratch;

    explicit HotFeasibility(const DualSystem& duals) {
        const Eigen::Index n = duals.duals[0].size();
        outers.reserve(duals.duals.size());
        for (const auto& v : duals.duals) outers.push_back(v * v.adjoint());
        scratch.resize(n, n);
    }

    double min_eigenvalue(const std::vector<double>& k) {
        scratch.setIdentity();
        for (std::size_t j = 0; j < outers.size(); ++j) {
            if (k[j] != 0.0) scratch -= k[j] * outers[j];
        }
        solver.compute(scratch, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }
};

// Largest feasible step along a fixed direction. Feasibility is downward
// closed in k, so the feasible stretch of any ray from the origin is an
// interval; bisection on the minimum eigenvalue finds its end.
inline double boundary_step(HotFeasibility& hot, const std::vector<double>& dir,
                            double tol) {
    std::vector<double> k(dir.size());
    auto feasible = [&](double t) {
        for (std::size_t j = 0; j < dir.size(); ++j) k[j] = t * dir[j];
        return hot.min_eigenvalue(k) >= -tol;
    };
    double hi = 1.0;
    int guard = 0;
    while (feasible(hi) && guard++ < 60) hi *= 2.0;
    if (guard >= 60) return hi;
    double lo = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

}  // namespace detail

/// All tangency candidates on one coordinate face: solutions of
/// {grad det parallel to b, det = 0} over the indices not clamped by
/// `face`, with every free component positive. The dual Gram matrix is
/// first split into orthogonal blocks and each block is solved on its own;
/// candidates are the per-block combinations. Degenerate contacts (several
/// eigenvalues vanishing together, gradient zero) arise exactly when the
/// Gram splits, so the block products recover them with closed-form
/// accuracy. Faces whose system has no admissible solution yield an empty
/// list; the optimum then lives on a smaller face.
inline std::vector<CoefficientVector> face_tangency(const DualSystem& duals,
                                                    const GainWeights& weights,
                                                    const std::vector<int>& face) {
    const int n = static_cast<int>(duals.duals.size());
    if (static_cast<int>(weights.b.size()) != n) {
        throw InvalidInput("face_tangency: weight count mismatch");
    }
    std::vector<bool> clamped(static_cast<std::size_t>(n), false);
    for (int j : face) {
        if (j < 0 || j >= n) throw InvalidInput("face_tangency: index out of range");
        clamped[static_cast<std::size_t>(j)] = true;
    }
    std::vector<int> free;
    for (int j = 0; j < n; ++j) {
        if (!clamped[static_cast<std::size_t>(j)]) {
            if (weights.b[static_cast<std::size_t>(j)] <= 0.0) {
                throw InvalidInput(
                    "face_tangency: free index " + std::to_string(j) +
                    " has zero weight; clamp it instead");
            }
            free.push_back(j);
        }
    }
    if (free.empty()) return {};

    Matrix gram(free.size(), free.size());
    for (std::size_t a = 0; a < free.size(); ++a) {
        for (std::size_t c = 0; c < free.size(); ++c) {
            gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) =
                inner_product(duals.duals[static_cast<std::size_t>(free[a])],
                              duals.duals[static_cast<std::size_t>(free[c])]);
        }
    }

    const auto blocks = detail::gram_blocks(gram);
    std::vector<std::vector<std::vector<double>>> perBlock;
    for (const auto& block : blocks) {
        Matrix sub(block.size(), block.size());
        std::vector<double> bsub(block.size());
        for (std::size_t a = 0; a < block.size(); ++a) {
            bsub[a] = weights.b[static_cast<std::size_t>(free[static_cast<std::size_t>(block[a])])];
            for (std::size_t c = 0; c < block.size(); ++c) {
                sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) =
                    gram(block[a], block[c]);
            }
        }
        auto cands = detail::solve_block(sub, bsub);
        if (cands.empty()) return {};
        perBlock.push_back(std::move(cands));
    }

    // Cartesian product of the per-block candidates.
    std::vector<CoefficientVector> out;
    std::vector<std::size_t> pick(perBlock.size(), 0);
    while (true) {
        std::vector<double> k(static_cast<std::size_t>(n), 0.0);
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const auto& cand = perBlock[bi][pick[bi]];
            for (std::size_t a = 0; a < blocks[bi].size(); ++a) {
                k[static_cast<std::size_t>(free[static_cast<std::size_t>(blocks[bi][a])])] =
                    cand[a];
            }
        }
        out.emplace_back(std::move(k));
        std::size_t level = 0;
        while (level < pick.size() && ++pick[level] == perBlock[level].size()) {
            pick[level] = 0;
            ++level;
        }
        if (level == pick.size()) break;
    }
    return out;
}

/// Maximizes G = T sum_j b_j k_j over the feasible region {k >= 0, A_0 PSD}.
/// Every subset of coefficients is considered as the clamped face; on each
/// face the tangency system is solved and a boundary point along the gain
/// direction is added as a safeguard; the best feasible candidate wins.
/// Ties within 1e-10 prefer fewer clamped indices, then the
/// lexicographically smallest k, so the result is deterministic.
inline Solution optimize(const StateEnsemble& ensemble) {
    const DualSystem duals = dual_vectors(ensemble);
    const GainWeights weights = GainWeights::from_ensemble(ensemble);
    const int n = ensemble.size();
    const double t = duals.gram.gramVolume;

    // Indices with zero weight contribute nothing to the gain; clamping
    // them selects the minimal-k representative among equal-gain optima.
    std::vector<int> active;
    std::vector<int> forced;
    for (int j = 0; j < n; ++j) {
        (weights.b[static_cast<std::size_t>(j)] > 0.0 ? active : forced).push_back(j);
    }

    detail::HotFeasibility hot(duals);
    std::vector<std::vector<double>> candidates;
    candidates.emplace_back(static_cast<std::size_t>(n), 0.0);

    for (unsigned mask = 0; mask < (1u << active.size()); ++mask) {
        std::vector<int> face = forced;
        std::vector<int> free;
        for (std::size_t i = 0; i < active.size(); ++i) {
            if ((mask >> i) & 1u) {
                face.push_back(active[i]);
            } else {
                free.push_back(active[i]);
            }
        }
        if (free.empty()) continue;
        std::sort(face.begin(), face.end());
        for (auto& cand : face_tangency(duals, weights, face)) {
            candidates.push_back(std::move(cand.k));
        }
        std::vector<double> dir(static_cast<std::size_t>(n), 0.0);
        for (int j : free) dir[static_cast<std::size_t>(j)] = weights.b[static_cast<std::size_t>(j)];
        const double step = detail::boundary_step(hot, dir, kPsdTolerance);
        for (auto& d : dir) d *= step;
        candidates.push_back(std::move(dir));
    }

    const double tieTolerance = 1e-10;
    bool haveBest = false;
    std::vector<double> bestK;
    double bestGain = 0.0;
    double bestMinEig = 0.0;
    int bestClamped = 0;
    for (const auto& k : candidates) {
        const double minEig = hot.min_eigenvalue(k);
        if (minEig < -kPsdTolerance) continue;
        double gain = 0.0;
        int clampedCount = 0;
        for (int j = 0; j < n; ++j) {
            gain += weights.b[static_cast<std::size_t>(j)] * k[static_cast<std::size_t>(j)];
            clampedCount += k[static_cast<std::size_t>(j)] == 0.0 ? 1 : 0;
        }
        gain *= t;
        bool better = false;
        if (!haveBest || gain > bestGain + tieTolerance) {
            better = true;
        } else if (gain > bestGain - tieTolerance) {
            if (clampedCount < bestClamped) {
                better = true;
            } else if (clampedCount == bestClamped &&
                       std::lexicographical_compare(k.begin(), k.end(),
                                                    bestK.begin(), bestK.end())) {
                better = true;
            }
        }
        if (better) {
            haveBest = true;
            bestK = k;
            bestGain = gain;
            bestMinEig = minEig;
            bestClamped = clampedCount;
        }
    }
    if (!haveBest) {
        throw InternalConsistencyError(
            "optimize: no feasible candidate (k = 0 should always qualify)");
    }

    Solution sol{CoefficientVector(bestK), bestGain, 0.0, {}, false, bestMinEig};
    double weightedByPrior = 0.0;
    for (int j = 0; j < n; ++j) {
        weightedByPrior += ensemble.priors()[static_cast<std::size_t>(j)] *
                           bestK[static_cast<std::size_t>(j)];
        if (bestK[static_cast<std::size_t>(j)] == 0.0) sol.activeFace.push_back(j);
    }
    sol.inconclusiveProbability = 1.0 - t * weightedByPrior;
    sol.boundaryContact = std::abs(det_inconclusive(duals, sol.k)) < 1e-8;
    return sol;
}

/// Exhaustive scan of the intercept box at the given per-axis resolution,
/// each sample checked by the full positivity test, followed by one 10x
/// local refinement around the best sample. Independent of the face-based
/// solver; serves as its ground truth. Feasibility is downward closed, so
/// a scan column can stop at the first infeasible point without missing
/// any feasible one.
inline Solution grid_oracle(const StateEnsemble& ensemble, int resolution = 200) {
    if (resolution < 2) throw InvalidInput("grid_oracle: resolution must be >= 2");
    const DualSystem duals = dual_vectors(ensemble);
    const GainWeights weights = GainWeights::from_ensemble(ensemble);
    const int n = ensemble.size();
    const double t = duals.gram.gramVolume;

    detail::HotFeasibility hot(duals);
    const Eigen::Index dim = duals.duals[0].size();
    std::vector<Matrix> partial(static_cast<std::size_t>(n) + 1,
                                Matrix::Identity(dim, dim));
    Eigen::SelfAdjointEigenSolver<Matrix> solver;

    std::vector<double> bestK(static_cast<std::size_t>(n), 0.0);
    double bestGain = 0.0;

    std::vector<double> point(static_cast<std::size_t>(n), 0.0);
    std::function<void(int, const std::vector<std::vector<double>>&)> scan =
        [&](int depth, const std::vector<std::vector<double>>& axes) {
            const auto& axis = axes[static_cast<std::size_t>(depth)];
            for (double value : axis) {
                point[static_cast<std::size_t>(depth)] = value;
                partial[static_cast<std::size_t>(depth) + 1] =
                    partial[static_cast<std::size_t>(depth)] -
                    value * hot.outers[static_cast<std::size_t>(depth)];
                solver.compute(partial[static_cast<std::size_t>(depth) + 1],
                               Eigen::EigenvaluesOnly);
                if (solver.eigenvalues().minCoeff() < -kPsdTolerance) break;
                if (depth + 1 == n) {
                    double gain = 0.0;
                    for (int j = 0; j < n; ++j) {
                        gain += weights.b[static_cast<std::size_t>(j)] *
                                point[static_cast<std::size_t>(j)];
                    }
                    gain *= t;
                    if (gain > bestGain) {
                        bestGain = gain;
                        bestK = point;
                    }
                } else {
                    scan(depth + 1, axes);
                }
            }
            point[static_cast<std::size_t>(depth)] = 0.0;
        };

    auto linspace = [](double lo, double hi, int count) {
        std::vector<double> v(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
        }
        return v;
    };

    std::vector<double> intercepts(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        intercepts[static_cast<std::size_t>(j)] = 1.0 / duals.norm_squared(j);
        axes[static_cast<std::size_t>(j)] =
            linspace(0.0, intercepts[static_cast<std::size_t>(j)], resolution);
    }
    scan(0, axes);

    // One local refinement pass at 10x resolution around the coarse best.
    const std::vector<double> coarse = bestK;
    for (int j = 0; j < n; ++j) {
        const double h = intercepts[static_cast<std::size_t>(j)] / (resolution - 1);
        const double lo = std::max(0.0, coarse[static_cast<std::size_t>(j)] - h);
        const double hi = std::min(intercepts[static_cast<std::size_t>(j)],
                                   coarse[static_cast<std::size_t>(j)] + h);
        axes[static_cast<std::size_t>(j)] = linspace(lo, hi, 21);
    }
    scan(0, axes);

    Solution sol{CoefficientVector(bestK), bestGain, 0.0, {}, false,
                 hot.min_eigenvalue(bestK)};
    double weightedByPrior = 0.0;
    for (int j = 0; j < n; ++j) {
        weightedByPrior += ensemble.priors()[static_cast<std::size_t>(j)] *
                           bestK[static_cast<std::size_t>(j)];
        if (bestK[static_cast<std::size_t>(j)] == 0.0) sol.activeFace.push_back(j);
    }
    sol.inconclusiveProbability = 1.0 - t * weightedByPrior;
    sol.boundaryContact = std::abs(det_inconclusive(duals, sol.k)) < 1e-8;
    return sol;
}

/// Upper bound on how much gain the oracle can miss at a given resolution:
/// flooring the true optimum to the coarse grid stays feasible (downward
/// closedness) and loses at most one step per axis.
inline double oracle_resolution_bound(const StateEnsemble& ensemble,
                                      int resolution) {
    const DualSystem duals = dual_vectors(ensemble);
    const GainWeights weights = GainWeights::from_ensemble(ensemble);
    double bound = 0.0;
    for (int j = 0; j < ensemble.size(); ++j) {
        bound += weights.b[static_cast<std::size_t>(j)] /
                 duals.norm_squared(j) / (resolution - 1);
    }
    return duals.gram.gramVolume * bound;
}

/// Samples the det(A_0) = 0 surface of a three-state problem over a grid of
/// (k1, k2) in the intercept box. det is linear in k3, so each grid node
/// carries at most one root; roots inside the box are emitted.
inline SurfaceSample surface_sample(const DualSystem& duals, int resolution) {
    if (duals.duals.size() != 3) {
        throw DimensionError("surface_sample requires a three-state problem");
    }
    if (resolution < 2) throw InvalidInput("surface_sample: resolution must be >= 2");
    const double t = duals.gram.gramVolume;
    const double n1 = duals.norm_squared(0);
    const double n2 = duals.norm_squared(1);
    const double n3 = duals.norm_squared(2);
    const double cap = (1.0 / n3) * (1.0 + 1e-9);

    SurfaceSample sample;
    for (int i = 0; i < resolution; ++i) {
        const double k1 = (1.0 / n1) * i / (resolution - 1);
        for (int j = 0; j < resolution; ++j) {
            const double k2 = (1.0 / n2) * j / (resolution - 1);
            // det = a - b k3 on this column.
            const double a = 1.0 - n1 * k1 - n2 * k2 + t * k1 * k2;
            const double b = n3 - t * (k1 + k2) + t * t * k1 * k2;
            if (std::abs(b) < 1e-12) {
                if (std::abs(a) < 1e-12) sample.points.push_back({k1, k2, 0.0});
                continue;
            }
            const double k3 = a / b;
            if (k3 >= 0.0 && k3 <= cap) sample.points.push_back({k1, k2, k3});
        }
    }
    return sample;
}

}  // namespace usd
