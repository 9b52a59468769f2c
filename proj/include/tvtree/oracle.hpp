#pragma once

// Oracle inequalities for the Edge Lasso: the general bound driven by a
// weighted compatibility constant, and the explicit bounds for the path, the
// branched path and decomposable trees in terms of the gap vector Delta.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "tvtree/compatibility.hpp"
#include "tvtree/estimator.hpp"
#include "tvtree/graph.hpp"
#include "tvtree/projection.hpp"
#include "tvtree/rng.hpp"

namespace tvtree {

struct DeltaVectors {
    std::vector<int> delta;      // d_1, floor(d_2/2), ceil(d_2/2), ..., d_{s+1} per segment with jumps
    std::vector<int> abs_delta;  // ceil(d/2), floor(d/2) for every gap of every segment
    double harmonic_mean = 0.0;  // of delta
    double geometric_mean = 0.0; // of abs_delta
};

inline DeltaVectors delta_vectors(const SegmentDecomposition& dec) {
    DeltaVectors dv;
    for (const auto& seg : dec.segments) {
        const auto& d = seg.gaps;
        if (seg.s() > 0) {
            dv.delta.push_back(d.front());
            for (std::size_t j = 1; j + 1 < d.size(); ++j) {
                dv.delta.push_back(d[j] / 2);
                dv.delta.push_back(d[j] - d[j] / 2);
            }
            dv.delta.push_back(d.back());
        }
        for (int x : d) {
            dv.abs_delta.push_back(x - x / 2);
            dv.abs_delta.push_back(x / 2);
        }
    }
    double inv = 0.0;
    for (int x : dv.delta) inv += 1.0 / x;
    dv.harmonic_mean = dv.delta.empty() ? 0.0 : dv.delta.size() / inv;
    double lg = 0.0;
    bool zero = false;
    for (int x : dv.abs_delta) {
        if (x == 0)
            zero = true;
        else
            lg += std::log(static_cast<double>(x));
    }
    dv.geometric_mean = (zero || dv.abs_delta.empty()) ? 0.0 : std::exp(lg / dv.abs_delta.size());
    return dv;
}

inline double zeta(BranchCase c, int b_star) {
    switch (c) {
        case BranchCase::Case1: return 0.0;
        case BranchCase::Case2: return b_star / 2.0;
        case BranchCase::Case3a: return 3.0;
        case BranchCase::Case3b: return b_star / 4.0;
        case BranchCase::Case4: return b_star / 4.0;
    }
    return 0.0;
}

struct BoundParams {
    double sigma = 1.0;
    double delta = 0.1;
    double gamma = 1.01;
};

struct OracleBound {
    double lambda = 0.0;
    double approximation = 0.0;  // ||f - f0||_n^2 + 4 lambda ||(D f)_{-S}||_1
    double noise = 0.0;
    double compatibility = 0.0;
    double total = 0.0;
};

inline double approximation_term(const TreeGraph& g, const ActiveSet& S, const Vector& f, const Vector& f0,
                                 double lambda) {
    const int n = g.n();
    if (f.size() != n || f0.size() != n) throw Error(ErrorCode::LengthMismatch, "signal length differs from n");
    double off = 0.0;
    for (int v = 2; v <= n; ++v)
        if (!S.contains(v)) off += std::abs(f[v - 1] - f[g.parent(v) - 1]);
    return (f - f0).squaredNorm() / n + 4.0 * lambda * off;
}

namespace detail {

inline void check_params(const BoundParams& p) {
    if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma)) throw Error(ErrorCode::BadParams, "sigma must be finite and >= 0");
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw Error(ErrorCode::BadParams, "delta must lie in (0, 1)");
    if (!(p.gamma > 1.0) || !std::isfinite(p.gamma)) throw Error(ErrorCode::BadGamma, "gamma must exceed 1");
}

inline OracleBound explicit_bound(const TreeGraph& g, const SegmentDecomposition& dec, const Vector& f,
                                   const Vector& f0, const BoundParams& p, double extra) {
    check_params(p);
    const int n = g.n(), s = dec.s();
    if (s == 0) throw Error(ErrorCode::EmptyS, "bound needs at least one jump");
    std::vector<int> jumps;
    for (const auto& seg : dec.segments) jumps.insert(jumps.end(), seg.jumps.begin(), seg.jumps.end());
    ActiveSet S(g, jumps);
    OracleBound b;
    b.lambda = lambda_rule(n, s, p.delta, p.gamma, p.sigma);
    b.approximation = approximation_term(g, S, f, f0, b.lambda);
    const double s2 = p.sigma * p.sigma;
    b.noise = 8.0 * std::log(2.0 / p.delta) * s2 / n + 4.0 * s2 * (s + 1.0) / n;
    const double mean_h = delta_vectors(dec).harmonic_mean;
    b.compatibility = 8.0 * s2 * std::log(4.0 * (n - s - 1) / p.delta) *
                      (2.0 * p.gamma * p.gamma * s / mean_h + extra);
    b.total = b.approximation + b.noise + b.compatibility;
    return b;
}

}  // namespace detail

/// General bound with a given (lower bound on the) weighted compatibility constant.
inline OracleBound bound_weighted(const TreeGraph& g, const ActiveSet& S, const Vector& f, const Vector& f0,
                                   const BoundParams& p, double kappa_w_sq) {
    detail::check_params(p);
    if (!(kappa_w_sq > 0.0)) throw Error(ErrorCode::BadParams, "compatibility constant must be positive");
    const int n = g.n(), s = S.size();
    OracleBound b;
    b.lambda = lambda_rule(n, s, p.delta, p.gamma, p.sigma);
    b.approximation = approximation_term(g, S, f, f0, b.lambda);
    const double c = 4.0 * p.sigma * p.sigma / n;
    b.noise = c * ((s + 1.0) + 2.0 * std::log(2.0 / p.delta));
    b.compatibility = c * p.gamma * p.gamma * (s + 1.0) / kappa_w_sq * std::log(4.0 * (n - s - 1) / p.delta);
    b.total = b.approximation + b.noise + b.compatibility;
    return b;
}

/// Path graph; every gap at least 4.
inline OracleBound bound_path(const TreeGraph& g, const SegmentDecomposition& dec, const Vector& f,
                               const Vector& f0, const BoundParams& p) {
    if (dec.g() != 1) throw Error(ErrorCode::InvalidDecomposition, "path bound needs a single segment");
    if (!dec.large_enough()) throw Error(ErrorCode::GapConditionViolated, "every gap must be at least 4");
    const int n = g.n(), s = dec.s();
    return detail::explicit_bound(g, dec, f, f0, p, 5.0 * (s + 1.0) / n * std::log(n / (s + 1.0)));
}

/// Branched path; the outer end gaps at least 4 and the inner gap conditions.
/// The weight term uses log((n + 1) / (2s + 3)).
inline OracleBound bound_branched(const TreeGraph& g, const SegmentDecomposition& dec, const Vector& f,
                               const Vector& f0, const BoundParams& p, BranchCase c, int b_star) {
    if (dec.g() != 3) throw Error(ErrorCode::InvalidDecomposition, "branched bound needs three segments");
    if (!dec.valid_for_bounds()) throw Error(ErrorCode::GapConditionViolated, "segment gap conditions violated");
    if (dec.segments[0].gaps.front() < 4 || dec.segments[1].gaps.back() < 4 || dec.segments[2].gaps.back() < 4)
        throw Error(ErrorCode::GapConditionViolated, "outer end gaps must be at least 4");
    const int n = g.n(), s = dec.s();
    const double extra =
        5.0 * (2.0 * s + 3.0) / (2.0 * n) * std::log((n + 1.0) / (2.0 * s + 3.0)) + zeta(c, b_star) / n;
    return detail::explicit_bound(g, dec, f, f0, p, extra);
}

/// Tree split into g paths; every gap at least 4.
inline OracleBound bound_general(const TreeGraph& g, const SegmentDecomposition& dec, const Vector& f,
                                 const Vector& f0, const BoundParams& p) {
    if (!dec.large_enough()) throw Error(ErrorCode::GapConditionViolated, "every gap must be at least 4");
    const int n = g.n(), s = dec.s(), k = dec.g();
    return detail::explicit_bound(g, dec, f, f0, p, 5.0 * (s + k) / static_cast<double>(n) * std::log(n / static_cast<double>(s + k)));
}

/// Lower bound on the weighted compatibility constant for S: the first form
/// of the decomposition bound when the decomposition satisfies the gap
/// conditions, otherwise the exact value for small trees.
inline double weighted_kappa_lower(const TreeGraph& g, const ActiveSet& S, double gamma,
                                   const std::optional<std::vector<int>>& cut_edges = std::nullopt) {
    auto wv = weight_vectors(g, S, gamma);
    auto dec = decompose(g, S, cut_edges);
    if (dec.valid_for_bounds() && dec.s() > 0) return kappa_lower_weighted(g, dec, wv.w).lower_bound;
    if (g.n() <= kExactKappaMaxN) return kappa_exact(g, S, wv.w).kappa_sq;
    throw Error(ErrorCode::InvalidDecomposition, "no valid decomposition and tree too large for exact enumeration");
}

// ---------------------------------------------------------------------------
// Simulation of the general bound at f = f0, S = S0.

struct ReplicateOutcome {
    std::uint64_t seed = 0;
    double mse = 0.0;
    double bound_rhs = 0.0;
    bool bound_holds = false;
    bool pattern_recovered = false;
};

struct SimulationSummary {
    std::vector<ReplicateOutcome> rows;
    double lambda = 0.0;
    double kappa_w_sq = 0.0;
    double bound_rhs = 0.0;
    double hold_rate = 0.0;
    double recovery_rate = 0.0;
};

/// Y = f0 + sigma eps with eps drawn from replicate_key(seed, r).
inline Vector noisy_observation(const Vector& f0, double sigma, std::uint64_t key) {
    return f0 + sigma * gaussian_vector(key, f0.size());
}

inline SimulationSummary simulate_oracle(const TreeGraph& g, const Vector& f0, const BoundParams& p,
                                         int replicates, std::uint64_t seed,
                                         std::optional<double> lambda = std::nullopt) {
    detail::check_params(p);
    if (replicates < 1) throw Error(ErrorCode::BadParams, "replicates must be positive");
    if (f0.size() != g.n()) throw Error(ErrorCode::LengthMismatch, "signal length differs from n");
    const int n = g.n();
    ActiveSet S0 = jump_set(g, f0);
    SimulationSummary out;
    out.lambda = lambda ? *lambda : lambda_rule(n, S0.size(), p.delta, p.gamma, p.sigma);
    out.kappa_w_sq = S0.empty() ? std::numeric_limits<double>::infinity() : weighted_kappa_lower(g, S0, p.gamma);
    if (S0.empty()) {
        // No jumps: the compatibility term vanishes.
        const double c = 4.0 * p.sigma * p.sigma / n;
        out.bound_rhs = c * (1.0 + 2.0 * std::log(2.0 / p.delta));
    } else {
        out.bound_rhs = bound_weighted(g, S0, f0, f0, p, out.kappa_w_sq).total;
    }
    const auto truth = jump_pattern(g, f0, 0.0);
    std::size_t holds = 0, recovered = 0;
    for (int r = 0; r < replicates; ++r) {
        const std::uint64_t key = replicate_key(seed, static_cast<std::uint64_t>(r));
        Vector y = noisy_observation(f0, p.sigma, key);
        auto res = fit(g, y, out.lambda);
        ReplicateOutcome row;
        row.seed = key;
        row.mse = (res.f_hat - f0).squaredNorm() / n;
        row.bound_rhs = out.bound_rhs;
        row.bound_holds = row.mse <= out.bound_rhs;
        row.pattern_recovered = jump_pattern(g, res.f_hat) == truth;
        holds += row.bound_holds;
        recovered += row.pattern_recovered;
        out.rows.push_back(row);
    }
    out.hold_rate = static_cast<double>(holds) / replicates;
    out.recovery_rate = static_cast<double>(recovered) / replicates;
    return out;
}

}  // namespace tvtree
