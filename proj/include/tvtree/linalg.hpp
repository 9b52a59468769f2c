#pragma once

// Dense linear algebra on top of Eigen: least squares with rank checks,
// orthogonal projectors, block and rank-one inverse updates, and a small
// active-set solver for sign-constrained quadratic programs with one linear
// equality constraint.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "tvtree/error.hpp"

namespace tvtree {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kRankTolerance = 1e-12;

struct LeastSquaresResult {
    Vector coefficients;
    Vector residual;
};

inline LeastSquaresResult least_squares(const Matrix& M, const Vector& y) {
    if (M.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "design rows differ from response length");
    Eigen::ColPivHouseholderQR<Matrix> qr(M);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < M.cols()) throw Error(ErrorCode::RankDeficient, "design has dependent columns");
    LeastSquaresResult r;
    r.coefficients = qr.solve(y);
    r.residual = y - M * r.coefficients;
    return r;
}

/// Orthogonal projection onto the column span of a full-rank basis.
class Projector {
public:
    explicit Projector(Matrix basis) : basis_(std::move(basis)) {
        if (basis_.cols() > 0) {
            Eigen::ColPivHouseholderQR<Matrix> qr(basis_);
            qr.setThreshold(kRankTolerance);
            if (qr.rank() < basis_.cols()) throw Error(ErrorCode::RankDeficient, "projection basis has dependent columns");
        }
        gram_inverse_ = (basis_.transpose() * basis_).inverse();
    }

    const Matrix& basis() const { return basis_; }
    const Matrix& gram_inverse() const { return gram_inverse_; }

    Vector coefficients(const Vector& y) const { return gram_inverse_ * (basis_.transpose() * y); }
    Vector project(const Vector& y) const { return basis_ * coefficients(y); }
    Vector antiproject(const Vector& y) const { return y - project(y); }
    Matrix matrix() const { return basis_ * gram_inverse_ * basis_.transpose(); }

private:
    Matrix basis_;
    Matrix gram_inverse_;
};

struct BlockInverse {
    Matrix b11, b12, b21, b22;

    Matrix assemble() const {
        Matrix m(b11.rows() + b21.rows(), b11.cols() + b12.cols());
        m << b11, b12, b21, b22;
        return m;
    }
};

namespace detail {

inline Matrix checked_inverse(const Matrix& A, const char* what) {
    Eigen::FullPivLU<Matrix> lu(A);
    lu.setThreshold(kRankTolerance);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularBlock, what);
    return lu.inverse();
}

}  // namespace detail

/// Inverse of [[A11, A12], [A21, A22]] via the Schur complement of A11.
inline BlockInverse partitioned_inverse(const Matrix& A11, const Matrix& A12, const Matrix& A21,
                                        const Matrix& A22) {
    if (A11.rows() != A11.cols() || A22.rows() != A22.cols() || A12.rows() != A11.rows() ||
        A12.cols() != A22.cols() || A21.rows() != A22.rows() || A21.cols() != A11.cols())
        throw Error(ErrorCode::LengthMismatch, "block shapes do not conform");
    const Matrix A11i = detail::checked_inverse(A11, "leading block is singular");
    const Matrix schur = A22 - A21 * A11i * A12;
    const Matrix Si = detail::checked_inverse(schur, "Schur complement is singular");
    BlockInverse r;
    r.b22 = Si;
    r.b12 = -A11i * A12 * Si;
    r.b21 = -Si * A21 * A11i;
    r.b11 = A11i + A11i * A12 * Si * A21 * A11i;
    return r;
}

/// (G + E)^{-1} from G^{-1} for a rank-one E.
inline Matrix rank_one_update_inverse(const Matrix& G_inv, const Matrix& E) {
    if (G_inv.rows() != G_inv.cols() || E.rows() != G_inv.rows() || E.cols() != G_inv.cols())
        throw Error(ErrorCode::LengthMismatch, "update shape differs from inverse");
    const double g = (E * G_inv).trace();
    if (std::abs(1.0 + g) < kRankTolerance) throw Error(ErrorCode::SingularUpdate, "1 + trace(E G^-1) vanishes");
    return G_inv - G_inv * E * G_inv / (1.0 + g);
}

// ---------------------------------------------------------------------------
// Sign-constrained equality QP:
//   minimize x^T Q x  subject to  a^T x = c,
//   x_i >= 0 (Positive), x_i <= 0 (Negative), free, or fixed at 0 (Zero).

enum class SignConstraint : unsigned char { Positive, Negative, Free, Zero };

struct EqpSolution {
    Vector x;
    double value = 0.0;
    int iterations = 0;
};

namespace detail {

// Primal active-set method in the variables t_i = sign_i x_i. Q must be
// positive semidefinite; not checked here.
inline EqpSolution eqp_active_set(const Matrix& Q, const Vector& a, double c,
                                  std::span<const SignConstraint> pattern) {
    const int n = static_cast<int>(Q.rows());
    std::vector<double> sgn(n, 1.0);
    std::vector<char> bounded(n, 0), working(n, 0), fixed(n, 0);
    for (int i = 0; i < n; ++i) {
        switch (pattern[i]) {
            case SignConstraint::Positive: bounded[i] = 1; break;
            case SignConstraint::Negative: bounded[i] = 1; sgn[i] = -1.0; break;
            case SignConstraint::Free: break;
            case SignConstraint::Zero: fixed[i] = 1; working[i] = 1; break;
        }
    }
    auto qt = [&](int i, int j) { return sgn[i] * sgn[j] * Q(i, j); };
    auto at = [&](int i) { return sgn[i] * a[i]; };

    EqpSolution sol;
    sol.x = Vector::Zero(n);
    if (c == 0.0) return sol;

    Vector t = Vector::Zero(n);
    {
        int pick = -1;
        double best = 0.0;
        for (int i = 0; i < n; ++i)
            if (!fixed[i] && !bounded[i] && std::abs(at(i)) > best) {
                best = std::abs(at(i));
                pick = i;
            }
        if (pick < 0)
            for (int i = 0; i < n; ++i)
                if (bounded[i] && at(i) * c > 0.0 && std::abs(at(i)) > best) {
                    best = std::abs(at(i));
                    pick = i;
                }
        if (pick < 0) throw Error(ErrorCode::Infeasible, "no sign-compatible coordinate can meet the constraint");
        t[pick] = c / at(pick);
        for (int i = 0; i < n; ++i)
            if (bounded[i] && i != pick) working[i] = 1;
    }

    double qscale = 0.0;
    for (int i = 0; i < n; ++i) qscale = std::max(qscale, std::abs(Q(i, i)));
    if (qscale == 0.0) qscale = 1.0;

    std::vector<int> F;
    Matrix QF;
    Vector aF;
    const int max_iter = 50 * n + 100;
    for (int it = 0; it < max_iter; ++it) {
        sol.iterations = it + 1;
        F.clear();
        for (int i = 0; i < n; ++i)
            if (!working[i]) F.push_back(i);
        const int m = static_cast<int>(F.size());
        QF.resize(m, m);
        aF.resize(m);
        for (int p = 0; p < m; ++p) {
            aF[p] = at(F[p]);
            for (int q = 0; q < m; ++q) QF(p, q) = qt(F[p], F[q]);
        }
        // Stationary point of t^T Q t on {a^T t = c, t_W = 0}.
        Vector tF;
        double mu;
        Eigen::LLT<Matrix> llt(QF);
        bool done_solve = false;
        if (llt.info() == Eigen::Success) {
            Vector y = llt.solve(aF);
            double denom = aF.dot(y);
            if (denom > 0.0 && std::isfinite(denom)) {
                tF = (c / denom) * y;
                mu = 2.0 * c / denom;
                done_solve = true;
            }
        }
        if (!done_solve) {
            Matrix K = Matrix::Zero(m + 1, m + 1);
            K.topLeftCorner(m, m) = 2.0 * QF;
            K.topRightCorner(m, 1) = -aF;
            K.bottomLeftCorner(1, m) = aF.transpose();
            Vector rhs = Vector::Zero(m + 1);
            rhs[m] = c;
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(K);
            Vector sol_k = cod.solve(rhs);
            if ((K * sol_k - rhs).norm() > 1e-9 * (1.0 + std::abs(c)))
                throw Error(ErrorCode::Infeasible, "equality subproblem has no solution");
            tF = sol_k.head(m);
            mu = sol_k[m];
        }

        Vector target = Vector::Zero(n);
        for (int p = 0; p < m; ++p) target[F[p]] = tF[p];
        Vector step = target - t;
        if (step.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + t.lpNorm<Eigen::Infinity>())) {
            // Multipliers of the active bounds.
            int drop = -1;
            double worst = -1e-12 * qscale * (1.0 + t.lpNorm<Eigen::Infinity>());
            for (int i = 0; i < n; ++i) {
                if (!working[i] || fixed[i]) continue;
                double grad = 0.0;
                for (int j = 0; j < n; ++j)
                    if (t[j] != 0.0) grad += qt(i, j) * t[j];
                double lam = 2.0 * grad - mu * at(i);
                if (lam < worst) {
                    worst = lam;
                    drop = i;
                }
            }
            if (drop < 0) {
                for (int i = 0; i < n; ++i) sol.x[i] = sgn[i] * t[i];
                sol.value = sol.x.dot(Q * sol.x);
                return sol;
            }
            working[drop] = 0;
            continue;
        }
        double alpha = 1.0;
        int block = -1;
        for (int i : F) {
            if (!bounded[i] || step[i] >= 0.0) continue;
            double r = -t[i] / step[i];
            if (r < alpha) {
                alpha = r;
                block = i;
            }
        }
        t += alpha * step;
        if (block >= 0) {
            t[block] = 0.0;
            working[block] = 1;
        }
    }
    throw Error(ErrorCode::NotConverged, "active-set iteration limit reached");
}

}  // namespace detail

inline EqpSolution signed_eqp_solve(const Matrix& Q, const Vector& a, double c,
                                    std::span<const SignConstraint> pattern) {
    const auto n = Q.rows();
    if (Q.cols() != n || a.size() != n || static_cast<Eigen::Index>(pattern.size()) != n)
        throw Error(ErrorCode::LengthMismatch, "QP dimensions do not agree");
    if (!Q.allFinite() || !a.allFinite() || !std::isfinite(c)) throw Error(ErrorCode::NonFinite, "non-finite QP data");
    if ((Q - Q.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + Q.lpNorm<Eigen::Infinity>()))
        throw Error(ErrorCode::BadParams, "Q is not symmetric");
    if (n > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff()))
            throw Error(ErrorCode::Unbounded, "Q is indefinite, objective unbounded below");
    }
    return detail::eqp_active_set(Q, a, c, pattern);
}

}  // namespace tvtree
