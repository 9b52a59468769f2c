#pragma once

// Compatibility constants
//
//   kappa^2 = min (s+1) ||X beta||_n^2  s.t.  ||beta_S||_1 - ||w_R . beta_R||_1 = 1,
//
// where R is the complement of {1} ∪ S (w = 1 for the unweighted constant),
// computed exactly for small trees and bounded below from a path
// decomposition for any size.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "tvtree/graph.hpp"
#include "tvtree/linalg.hpp"
#include "tvtree/projection.hpp"

namespace tvtree {

inline constexpr int kExactKappaMaxN = 14;

/// (s+1) ||X beta||_n^2 / (||beta_S||_1 - ||w_R beta_R||_1)^2; +inf when the
/// denominator is not positive.
inline double compatibility_ratio(const TreeGraph& g, const ActiveSet& S, const Vector& beta,
                                  const std::optional<Vector>& weights = std::nullopt) {
    const int n = g.n();
    if (beta.size() != n) throw Error(ErrorCode::LengthMismatch, "coefficient length differs from n");
    double c = 0.0;
    for (int v = 2; v <= n; ++v) {
        double a = std::abs(beta[v - 1]);
        if (S.contains(v))
            c += a;
        else
            c -= (weights ? (*weights)[v - 1] : 1.0) * a;
    }
    if (!(c > 0.0)) return std::numeric_limits<double>::infinity();
    Vector f = signal_from_coefficients(g, beta);
    return (S.size() + 1) * f.squaredNorm() / n / (c * c);
}

struct KappaExact {
    double kappa_sq = 0.0;
    Vector beta;  // minimiser, normalised to constraint value 1
};

/// Exhaustive over sign patterns of beta_2..beta_n; patterns and their
/// negatives give the same value, so the sign of beta_2 is fixed.
inline KappaExact kappa_exact(const TreeGraph& g, const ActiveSet& S,
                              const std::optional<Vector>& weights = std::nullopt) {
    const int n = g.n();
    if (n > kExactKappaMaxN)
        throw Error(ErrorCode::TooLarge, "exact enumeration limited to n <= " + std::to_string(kExactKappaMaxN));
    if (S.empty()) throw Error(ErrorCode::InfeasibleConstraint, "constraint cannot be met with an empty active set");
    if (weights && weights->size() != n) throw Error(ErrorCode::LengthMismatch, "weight length differs from n");

    const Matrix X = design_matrix(g);
    const Matrix Q = (static_cast<double>(S.size() + 1) / n) * (X.transpose() * X);
    std::vector<double> mag(n, 0.0);
    for (int v = 2; v <= n; ++v) mag[v - 1] = S.contains(v) ? 1.0 : -(weights ? (*weights)[v - 1] : 1.0);

    std::vector<SignConstraint> pattern(n, SignConstraint::Free);
    Vector a = Vector::Zero(n);
    KappaExact best;
    best.kappa_sq = std::numeric_limits<double>::infinity();
    const std::uint64_t count = std::uint64_t{1} << (n - 2);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        for (int v = 2; v <= n; ++v) {
            bool neg = v > 2 && ((mask >> (v - 3)) & 1u);
            pattern[v - 1] = neg ? SignConstraint::Negative : SignConstraint::Positive;
            a[v - 1] = neg ? -mag[v - 1] : mag[v - 1];
        }
        EqpSolution sol;
        try {
            sol = detail::eqp_active_set(Q, a, 1.0, pattern);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Infeasible) continue;
            throw;
        }
        if (sol.value < best.kappa_sq) {
            best.kappa_sq = sol.value;
            best.beta = sol.x;
        }
    }
    if (!std::isfinite(best.kappa_sq)) throw Error(ErrorCode::InfeasibleConstraint, "no feasible sign pattern");
    return best;
}

// ---------------------------------------------------------------------------
// Lower bounds from a path decomposition

/// 1/d_1 + sum_j (1/u_j + 1/(d_j - u_j)) + 1/d_{s+1}; zero without jumps.
inline double segment_k(const std::vector<int>& gaps, const std::vector<int>& splits) {
    if (gaps.size() < 2) return 0.0;
    if (splits.size() + 2 != gaps.size()) throw Error(ErrorCode::InvalidDecomposition, "one split per interior gap");
    double k = 1.0 / gaps.front() + 1.0 / gaps.back();
    for (std::size_t j = 0; j < splits.size(); ++j) {
        int d = gaps[j + 1], u = splits[j];
        if (u < 1 || u >= d) throw Error(ErrorCode::InvalidDecomposition, "split must lie inside its gap");
        k += 1.0 / u + 1.0 / (d - u);
    }
    return k;
}

inline double decomposition_k(const SegmentDecomposition& dec) {
    double k = 0.0;
    for (const auto& seg : dec.segments) k += segment_k(seg.gaps, seg.splits);
    return k;
}

struct KappaBound {
    double K = 0.0;
    double lower_bound = 0.0;
};

namespace detail {

inline KappaBound kappa_bound_checked(const SegmentDecomposition& dec) {
    if (dec.s() == 0) throw Error(ErrorCode::EmptyS, "bound needs at least one jump");
    if (!dec.valid_for_bounds())
        throw Error(ErrorCode::InvalidDecomposition, "gap conditions (end gaps >= 2, interior gaps >= 4) violated");
    KappaBound kb;
    kb.K = decomposition_k(dec);
    kb.lower_bound = (dec.s() + 1) / (dec.n * kb.K);
    return kb;
}

}  // namespace detail

inline KappaBound kappa_lower_path(const SegmentDecomposition& dec) {
    if (dec.g() != 1) throw Error(ErrorCode::InvalidDecomposition, "path bound needs a single segment");
    return detail::kappa_bound_checked(dec);
}

inline KappaBound kappa_lower_branched(const SegmentDecomposition& dec) {
    if (dec.g() != 3) throw Error(ErrorCode::InvalidDecomposition, "branched bound needs three segments");
    return detail::kappa_bound_checked(dec);
}

struct GeneralKappaBound {
    double K = 0.0;
    double lower_bound = 0.0;
    double harmonic_form = 0.0;  // (s+1)/n * mean_h(Delta) / (2s)
};

inline GeneralKappaBound kappa_lower_general(const SegmentDecomposition& dec) {
    if (dec.s() == 0) throw Error(ErrorCode::EmptyS, "bound needs at least one jump");
    if (!dec.large_enough()) throw Error(ErrorCode::NotLargeEnough, "every gap must be at least 4");
    auto kb = detail::kappa_bound_checked(dec);
    double inv_sum = 0.0;
    int len = 0;
    for (const auto& seg : dec.segments) {
        if (seg.s() == 0) continue;
        const auto& d = seg.gaps;
        inv_sum += 1.0 / d.front() + 1.0 / d.back();
        len += 2;
        for (std::size_t j = 1; j + 1 < d.size(); ++j) {
            inv_sum += 1.0 / (d[j] / 2) + 1.0 / (d[j] - d[j] / 2);
            len += 2;
        }
    }
    const double mean_h = len / inv_sum;
    GeneralKappaBound out;
    out.K = kb.K;
    out.lower_bound = kb.lower_bound;
    out.harmonic_form = (dec.s() + 1.0) / dec.n * mean_h / (2.0 * dec.s());
    return out;
}

struct WeightedKappaBound {
    double K = 0.0;
    double w_inf = 0.0;
    double dstar_w = 0.0;      // ||D* w||_2 over edges kept by the decomposition
    double lower_bound = 0.0;  // (s+1)/n / (||w||_inf sqrt(K) + ||D* w||_2)^2
    double simplified = 0.0;   // (s+1)/n / (2 (||w||_inf^2 K + ||D* w||_2^2))
};

inline WeightedKappaBound kappa_lower_weighted(const TreeGraph& g, const SegmentDecomposition& dec,
                                               const Vector& w) {
    if (w.size() != g.n()) throw Error(ErrorCode::LengthMismatch, "weight length differs from n");
    auto kb = detail::kappa_bound_checked(dec);
    std::vector<char> cut(g.n() + 1, 0);
    for (int c : dec.cut_edges) cut[c] = 1;
    double ss = 0.0;
    for (int v = 2; v <= g.n(); ++v) {
        if (cut[v]) continue;
        double d = w[v - 1] - w[g.parent(v) - 1];
        ss += d * d;
    }
    WeightedKappaBound out;
    out.K = kb.K;
    out.w_inf = w.lpNorm<Eigen::Infinity>();
    out.dstar_w = std::sqrt(ss);
    const double scale = (dec.s() + 1.0) / dec.n;
    const double root = out.w_inf * std::sqrt(out.K) + out.dstar_w;
    out.lower_bound = scale / (root * root);
    out.simplified = scale / (2.0 * (out.w_inf * out.w_inf * out.K + ss));
    return out;
}

// ---------------------------------------------------------------------------
// Witness signals

struct Witness {
    Vector f;
    Vector beta;
    double objective = 0.0;  // compatibility ratio of beta
};

/// Piecewise constant signal alternating in sign between jumps, with level
/// n/d on end pieces and 2n/d on interior pieces. Each segment continues the
/// level of the vertex it hangs from, which needs matching end gaps there.
/// Interior gaps must be even for the ratio to meet the lower bound.
inline Witness tight_witness(const TreeGraph& g, const SegmentDecomposition& dec) {
    const int n = g.n();
    if (dec.s() == 0) throw Error(ErrorCode::EmptyS, "witness needs at least one jump");
    for (const auto& seg : dec.segments) {
        if (seg.s() == 0) throw Error(ErrorCode::WitnessConditions, "every segment must carry a jump");
        for (std::size_t j = 1; j + 1 < seg.gaps.size(); ++j)
            if (seg.gaps[j] % 2 != 0) throw Error(ErrorCode::OddInteriorGap, "interior gaps must be even");
    }
    Vector f = Vector::Zero(n);
    std::vector<char> done(n + 1, 0);
    // Segments are listed in increasing order of their top vertex, so the
    // vertex a segment hangs from is always assigned before it.
    for (const auto& seg : dec.segments) {
        const int top = seg.vertices.front();
        double sign = -1.0;
        if (top != 1) {
            double attach = f[g.parent(top) - 1];
            if (!done[g.parent(top)]) throw Error(ErrorCode::WitnessConditions, "segment order");
            sign = attach < 0 ? -1.0 : 1.0;
            if (std::abs(std::abs(attach) - static_cast<double>(n) / seg.gaps.front()) > 1e-12 * n)
                throw Error(ErrorCode::WitnessConditions, "end gaps meeting at a ramification point differ");
        }
        std::size_t piece = 0;
        int left = seg.gaps[0];
        for (int v : seg.vertices) {
            while (left == 0) {
                ++piece;
                left = seg.gaps[piece];
                sign = -sign;
            }
            const bool end = piece == 0 || piece + 1 == seg.gaps.size();
            f[v - 1] = sign * (end ? 1.0 : 2.0) * n / seg.gaps[piece];
            done[v] = 1;
            --left;
        }
    }
    Witness w;
    w.f = f;
    w.beta = rooted_differences(g, f);
    std::vector<int> jumps;
    for (const auto& seg : dec.segments) jumps.insert(jumps.end(), seg.jumps.begin(), seg.jumps.end());
    w.objective = compatibility_ratio(g, ActiveSet(g, jumps), w.beta);
    return w;
}

inline Witness tight_witness_path(const SegmentDecomposition& dec) {
    if (dec.g() != 1) throw Error(ErrorCode::InvalidDecomposition, "path witness needs a single segment");
    return tight_witness(path_graph(dec.n), dec);
}

}  // namespace tvtree
