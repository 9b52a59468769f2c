#pragma once

// Projections of design columns onto the span of the columns indexed by
// {1} ∪ S, and the weights derived from their antiprojections.
//
// Under the design X = D~^{-1}, column X_j is the indicator of the subtree
// rooted at j, and span{X_1, X_S} is the set of signals that are constant on
// every component left after deleting the edges in S. Projecting X_j therefore
// only involves the jumps bounding the component that contains j.

#include <cmath>
#include <map>
#include <vector>

#include "tvtree/graph.hpp"
#include "tvtree/linalg.hpp"

namespace tvtree {

inline Matrix design_matrix(const TreeGraph& g) { return path_matrix(g).cast<double>(); }

/// Columns of X for the given vertex labels, in that order.
inline Matrix design_columns(const TreeGraph& g, const std::vector<int>& cols) {
    const int n = g.n();
    Matrix M = Matrix::Zero(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        int j = cols[k];
        for (int t = g.tin(j); t < g.tout(j); ++t) M(g.preorder()[t] - 1, static_cast<Eigen::Index>(k)) = 1.0;
    }
    return M;
}

/// Labels 1, S_1, ..., S_s.
inline std::vector<int> unpenalized_and_active(const ActiveSet& S) {
    std::vector<int> c{1};
    c.insert(c.end(), S.vertices.begin(), S.vertices.end());
    return c;
}

/// Coefficients of the projection of X_j on the active columns, keyed by
/// column label, together with the squared length of the antiprojection.
struct LocalProjection {
    std::map<int, double> theta;
    double antiprojection_sq = 0.0;
};

/// Path graph on 1..n. j lies strictly between j_minus in {1} ∪ S and
/// j_plus in S ∪ {n+1}; X_{n+1} is the zero column.
inline LocalProjection local_projection_path(int n, const ActiveSet& S, int j) {
    if (j < 1 || j > n) throw Error(ErrorCode::OffsetOutOfRange, "vertex outside 1..n");
    if (j == 1 || S.contains(j)) throw Error(ErrorCode::IndexInActiveSet, "column already in the active span");
    int jm = 1, jp = n + 1;
    for (int x : S.vertices) {
        if (x < j) jm = x;
        if (x > j) {
            jp = x;
            break;
        }
    }
    const double L = jp - jm;
    LocalProjection lp;
    lp.theta[jm] = (jp - j) / L;
    if (jp <= n) lp.theta[jp] = (j - jm) / L;
    lp.antiprojection_sq = static_cast<double>(jp - j) * static_cast<double>(j - jm) / L;
    return lp;
}

/// Coefficients on the K + 1 columns surrounding a ramification point, for
/// the vertex at offset i in region l (0 = inbound, measured from the inbound
/// jump; l >= 1 = outbound branch l, measured back from its jump).
struct BranchProjection {
    std::vector<double> theta;
    double antiprojection_sq = 0.0;
};

inline BranchProjection local_projection_branch(const BranchingDescriptor& bd, int l, int i) {
    const int K = bd.K();
    if (l < 0 || l > K) throw Error(ErrorCode::OffsetOutOfRange, "branch index out of range");
    const int hi = (l == 0) ? bd.b[0] - 1 : bd.b[l];
    if (i < 1 || i > hi) throw Error(ErrorCode::OffsetOutOfRange, "offset outside the branch");
    const double bs = bd.b_star();
    const double a = i / bs;
    BranchProjection bp;
    bp.theta.assign(K + 1, 0.0);
    if (l == 0) {
        bp.theta[0] = 1.0 - a;
        for (int k = 1; k <= K; ++k) bp.theta[k] = a;
    } else {
        bp.theta[0] = a;
        for (int k = 1; k <= K; ++k) bp.theta[k] = -a;
        bp.theta[l] = 1.0 - a;
    }
    bp.antiprojection_sq = i * (bs - i) / bs;
    return bp;
}

/// Projection of X_j by least squares on the active columns.
inline LocalProjection direct_projection(const TreeGraph& g, const ActiveSet& S, int j) {
    if (j < 1 || j > g.n()) throw Error(ErrorCode::OffsetOutOfRange, "vertex outside 1..n");
    if (j == 1 || S.contains(j)) throw Error(ErrorCode::IndexInActiveSet, "column already in the active span");
    auto cols = unpenalized_and_active(S);
    auto ls = least_squares(design_columns(g, cols), design_columns(g, {j}).col(0));
    LocalProjection lp;
    for (std::size_t k = 0; k < cols.size(); ++k) lp.theta[cols[k]] = ls.coefficients[static_cast<Eigen::Index>(k)];
    lp.antiprojection_sq = ls.residual.squaredNorm();
    return lp;
}

struct WeightVectors {
    Vector omega;  // ||A X_j|| / sqrt(n), zero on {1} ∪ S
    Vector w;      // 1 - omega / gamma
};

inline WeightVectors weight_vectors(const TreeGraph& g, const ActiveSet& S, double gamma) {
    if (!(gamma > 1.0) || !std::isfinite(gamma)) throw Error(ErrorCode::BadGamma, "gamma must exceed 1");
    const int n = g.n();
    WeightVectors wv;
    wv.omega = Vector::Zero(n);
    if (g.is_path()) {
        for (int j = 2; j <= n; ++j)
            if (!S.contains(j)) wv.omega[j - 1] = std::sqrt(local_projection_path(n, S, j).antiprojection_sq / n);
    } else {
        Projector P(design_columns(g, unpenalized_and_active(S)));
        for (int j = 2; j <= n; ++j) {
            if (S.contains(j)) continue;
            Vector xj = design_columns(g, {j}).col(0);
            wv.omega[j - 1] = P.antiproject(xj).norm() / std::sqrt(static_cast<double>(n));
        }
    }
    wv.w = Vector::Ones(n) - wv.omega / gamma;
    return wv;
}

}  // namespace tvtree
