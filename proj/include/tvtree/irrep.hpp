#pragma once

// Irrepresentable condition for the Edge Lasso on trees:
//
//   || X_R^T X_{1∪S0} (X_{1∪S0}^T X_{1∪S0})^{-1} (0, z0) ||_inf < 1,
//
// with R the complement of {1} ∪ S0. The left-hand side is computed through
// the centred active columns, with the full unpenalised block as a
// cross-check, and compared against the closed-form rules for paths and
// single ramification points.
//
// For a vertex j outside the active set, the value at j depends only on the
// component C of the tree minus the active edges that contains j: with a =
// |subtree(j) ∩ C| / |C| it equals a z_top + sum over jumps v closing C from
// below of ([v in subtree(j)] - a) z_v. On a path this gives the rule that
// two consecutive jumps more than one vertex apart must have opposite signs.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvtree/estimator.hpp"
#include "tvtree/graph.hpp"
#include "tvtree/linalg.hpp"
#include "tvtree/oracle.hpp"
#include "tvtree/projection.hpp"
#include "tvtree/rng.hpp"

namespace tvtree {

inline constexpr double kIrrepMargin = 1e-9;

struct IrrepLhs {
    double lhs = 0.0;
    double lhs_full = 0.0;  // same quantity through the unpenalised block inverse
    Vector values;          // signed value per vertex, zero on {1} ∪ S0
};

namespace detail {

inline void check_signs(const ActiveSet& S0, const std::vector<int>& z0) {
    if (S0.empty()) throw Error(ErrorCode::EmptyS, "irrepresentable condition needs a non-empty active set");
    if (static_cast<int>(z0.size()) != S0.size()) throw Error(ErrorCode::LengthMismatch, "one sign per active edge");
    for (int z : z0)
        if (z != 1 && z != -1) throw Error(ErrorCode::BadParams, "signs must be +1 or -1");
}

/// (X_j^T u)_j for every vertex: sums of u over subtrees.
inline Vector subtree_sums(const TreeGraph& g, Vector u) {
    const auto& order = g.preorder();
    for (int t = g.n() - 1; t >= 1; --t) {
        int v = order[t];
        u[g.parent(v) - 1] += u[v - 1];
    }
    return u;
}

}  // namespace detail

inline IrrepLhs irrep_lhs_detail(const TreeGraph& g, const ActiveSet& S0, const std::vector<int>& z0) {
    detail::check_signs(S0, z0);
    const int n = g.n(), s = S0.size();
    if (s + 1 >= n) throw Error(ErrorCode::EmptyComplement, "every edge is active");
    Vector z(s);
    for (int k = 0; k < s; ++k) z[k] = z0[k];
    const Matrix M = design_columns(g, S0.vertices);
    const Vector colsum = M.colwise().sum().transpose();

    // Centred route: (M^T A_1 M)^{-1} = (M^T M - colsum colsum^T / n)^{-1}.
    const Matrix Ginv = detail::checked_inverse(M.transpose() * M, "active Gram matrix is singular");
    const Matrix E = -(colsum * colsum.transpose()) / n;
    const Vector coef = rank_one_update_inverse(Ginv, E) * z;
    Vector u = M * coef;
    u.array() -= u.mean();
    Vector vals = detail::subtree_sums(g, u);

    // Full route through the block inverse of [1, M]^T [1, M].
    Matrix A11(1, 1);
    A11(0, 0) = n;
    const auto B = partitioned_inverse(A11, colsum.transpose(), colsum, M.transpose() * M);
    const double c1 = (B.b12 * z)(0);
    const Vector cS = B.b22 * z;
    Vector u2 = M * cS;
    u2.array() += c1;
    Vector vals2 = detail::subtree_sums(g, u2);

    IrrepLhs out;
    out.values = Vector::Zero(n);
    for (int j = 2; j <= n; ++j) {
        if (S0.contains(j)) continue;
        out.values[j - 1] = vals[j - 1];
        out.lhs = std::max(out.lhs, std::abs(vals[j - 1]));
        out.lhs_full = std::max(out.lhs_full, std::abs(vals2[j - 1]));
    }
    return out;
}

inline double irrep_lhs(const TreeGraph& g, const ActiveSet& S0, const std::vector<int>& z0) {
    return irrep_lhs_detail(g, S0, z0).lhs;
}

struct IrrepVerdict {
    bool satisfied = true;
    std::vector<std::string> violated_rules;

    void fail(const std::string& rule) {
        satisfied = false;
        if (std::find(violated_rules.begin(), violated_rules.end(), rule) == violated_rules.end())
            violated_rules.push_back(rule);
    }
};

inline const char* const kRuleStaircase = "staircase";
inline const char* const kRuleBranchOpposition = "branch_sign_opposition";
inline const char* const kRuleBranchAgreement = "branch_sign_agreement";
inline const char* const kRuleBranchGeometry = "branch_geometry";

/// Path graph: consecutive jumps separated by at least two vertices need
/// opposite signs. Adjacent jumps leave no free vertex between them.
inline IrrepVerdict irrep_check_path(const std::vector<int>& positions, const std::vector<int>& z) {
    if (positions.size() != z.size()) throw Error(ErrorCode::LengthMismatch, "one sign per jump");
    IrrepVerdict v;
    for (std::size_t k = 0; k + 1 < positions.size(); ++k)
        if (positions[k + 1] - positions[k] >= 2 && z[k] * z[k + 1] > 0) v.fail(kRuleStaircase);
    return v;
}

/// Single ramification point with inbound jump sign z[0] and outbound signs
/// z[1..K]; a zero marks a region closed by the root or a leaf instead of a
/// jump. Values in the inbound region move linearly from z[0] towards
/// P - z[0] (P = z[1] + ... + z[K]); on branch l they start at z[l] and move
/// by z[0] - P. Each region must stay strictly inside (-1, 1).
inline IrrepVerdict irrep_check_branching(const BranchingDescriptor& bd, const std::vector<int>& z) {
    const int K = bd.K();
    if (static_cast<int>(z.size()) != K + 1) throw Error(ErrorCode::LengthMismatch, "one sign per surrounding jump");
    for (int x : z)
        if (x < -1 || x > 1) throw Error(ErrorCode::BadParams, "signs must be -1, 0 or +1");
    const double bs = bd.b_star();
    int P = 0;
    for (int l = 1; l <= K; ++l) P += z[l];
    IrrepVerdict v;
    auto region = [&](int anchor, int slope, int count, const char* sign_rule) {
        if (count < 1) return;
        if (anchor != 0 && anchor * slope >= 0) {
            v.fail(sign_rule);
            return;
        }
        if (std::abs(anchor + (count / bs) * slope) >= 1.0 - kIrrepMargin) v.fail(kRuleBranchGeometry);
    };
    region(z[0], P - z[0], bd.b[0] - 1, kRuleBranchOpposition);
    for (int l = 1; l <= K; ++l) region(z[l], z[0] - P, bd.b[l], kRuleBranchAgreement);
    return v;
}

struct IrrepReport {
    double lhs = 0.0;
    bool satisfied = false;
    std::optional<bool> analytic;
    std::vector<std::string> violated_rules;
};

/// Numeric value plus the closed-form verdict when every component of the
/// tree minus S0 is a path or contains a single ramification point.
inline IrrepReport irrep_report(const TreeGraph& g, const ActiveSet& S0, const std::vector<int>& z0) {
    IrrepReport rep;
    rep.lhs = irrep_lhs(g, S0, z0);
    rep.satisfied = rep.lhs <= 1.0 - kIrrepMargin;
    const int n = g.n();
    std::vector<int> sign(n + 1, 0);
    for (int k = 0; k < S0.size(); ++k) sign[S0.vertices[k]] = z0[k];

    IrrepVerdict verdict;
    if (g.is_path()) {
        verdict = irrep_check_path(S0.vertices, z0);
    } else {
        // Components are identified by their top vertex.
        std::vector<int> top(n + 1, 0);
        for (int v : g.preorder()) top[v] = (v == 1 || sign[v] != 0) ? v : top[g.parent(v)];
        std::vector<std::vector<int>> members(n + 1);
        for (int v = 1; v <= n; ++v) members[top[v]].push_back(v);
        for (int t = 1; t <= n; ++t) {
            const auto& mem = members[t];
            if (mem.empty() || top[t] != t) continue;
            std::vector<int> branch_points;
            for (int v : mem)
                if (g.children(v).size() >= 2) branch_points.push_back(v);
            if (branch_points.size() > 1) {
                rep.violated_rules = {};
                rep.analytic.reset();
                return rep;
            }
            if (branch_points.empty()) {
                int bottom = mem.back();
                for (int v : mem)
                    if (g.depth(v) > g.depth(bottom)) bottom = v;
                int below = g.children(bottom).empty() ? 0 : sign[g.children(bottom).front()];
                if (mem.size() >= 2 && sign[t] != 0 && sign[t] == below) verdict.fail(kRuleStaircase);
                continue;
            }
            auto bd = branching_descriptor(g, S0, branch_points.front());
            std::vector<int> zz;
            for (int x : bd.surrounding) zz.push_back(x == 0 ? 0 : sign[x]);
            auto part = irrep_check_branching(bd, zz);
            for (const auto& r : part.violated_rules) verdict.fail(r);
        }
    }
    rep.analytic = verdict.satisfied;
    rep.violated_rules = verdict.violated_rules;
    return rep;
}

/// Recomputes the condition with the design X diag(flips) and signs
/// flips_S z0, which describes the same problem with reoriented edges.
struct OrientationCheck {
    double lhs = 0.0;
    double lhs_flipped = 0.0;
    bool same_verdict = false;
};

inline OrientationCheck orientation_invariance_check(const TreeGraph& g, const ActiveSet& S0,
                                                     const std::vector<int>& z0, const std::vector<int>& flips) {
    const int n = g.n();
    if (static_cast<int>(flips.size()) != n) throw Error(ErrorCode::LengthMismatch, "one flip per column");
    detail::check_signs(S0, z0);
    Matrix X = design_matrix(g);
    for (int j = 0; j < n; ++j) X.col(j) *= flips[j];
    const int s = S0.size();
    Matrix XA(n, s + 1);
    XA.col(0) = X.col(0);
    Vector zz = Vector::Zero(s + 1);
    for (int k = 0; k < s; ++k) {
        XA.col(k + 1) = X.col(S0.vertices[k] - 1);
        zz[k + 1] = flips[S0.vertices[k] - 1] * z0[k];
    }
    const Vector vals = X.transpose() * (XA * (XA.transpose() * XA).ldlt().solve(zz));
    OrientationCheck out;
    out.lhs = irrep_lhs(g, S0, z0);
    for (int j = 2; j <= n; ++j)
        if (!S0.contains(j)) out.lhs_flipped = std::max(out.lhs_flipped, std::abs(vals[j - 1]));
    out.same_verdict = (out.lhs <= 1.0 - kIrrepMargin) == (out.lhs_flipped <= 1.0 - kIrrepMargin);
    return out;
}

// ---------------------------------------------------------------------------
// Pattern recovery by simulation

/// Fraction of replicates where the fit at the given lambdas reproduces
/// sign(D f0) exactly; one entry per lambda, in the order given. Replicate r
/// uses noise key replicate_key(seed, r) for every lambda.
inline std::vector<double> pattern_recovery_frequencies(const TreeGraph& g, const Vector& f0, double sigma,
                                                        const std::vector<double>& lambdas, int replicates,
                                                        std::uint64_t seed) {
    if (replicates < 1) throw Error(ErrorCode::BadParams, "replicates must be positive");
    if (f0.size() != g.n()) throw Error(ErrorCode::LengthMismatch, "signal length differs from n");
    std::vector<std::size_t> idx(lambdas.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Largest lambda first so each fit warm-starts from a sparser solution.
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });
    const auto truth = jump_pattern(g, f0, 0.0);
    std::vector<double> hits(lambdas.size(), 0.0);
    for (int r = 0; r < replicates; ++r) {
        Vector y = noisy_observation(f0, sigma, replicate_key(seed, static_cast<std::uint64_t>(r)));
        FitOptions opt;
        for (std::size_t k : idx) {
            auto res = fit(g, y, lambdas[k], opt);
            if (jump_pattern(g, res.f_hat) == truth) hits[k] += 1.0;
            opt.warm_start = res.beta_hat;
        }
    }
    for (auto& h : hits) h /= replicates;
    return hits;
}

inline double sign_consistency_mc(const TreeGraph& g, const Vector& f0, double sigma, double delta, double gamma,
                                  int replicates, std::uint64_t seed) {
    const double lambda = lambda_rule(g.n(), jump_set(g, f0).size(), delta, gamma, sigma);
    return pattern_recovery_frequencies(g, f0, sigma, {lambda}, replicates, seed).front();
}

/// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(double successes, double trials, double z = 1.959963984540054) {
    if (trials <= 0) return {0.0, 1.0};
    const double p = successes / trials, z2 = z * z;
    const double centre = (p + z2 / (2 * trials)) / (1 + z2 / trials);
    const double half = z * std::sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / (1 + z2 / trials);
    const double lo = successes <= 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = successes >= trials ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

}  // namespace tvtree
