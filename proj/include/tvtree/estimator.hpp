#pragma once

// Edge Lasso on a tree:
//
//   f^ = argmin_f ||Y - f||_n^2 + 2 lambda ||D f||_1.
//
// Solved in the coefficients beta = D~ f (f = X beta) with beta_1
// unpenalised: the response and the columns X_2..X_n are centred, cyclic
// coordinate descent with soft thresholding runs on the centred problem and
// beta_1 is recovered from the means. Column X_v is the subtree indicator of
// v, which is a contiguous range in preorder, so each coordinate step is a
// range update of the residual kept in a Fenwick tree.
//
// Once the support and signs stop changing, the fit restricted to that
// pattern is solved in closed form (group means shifted by the penalty) and
// accepted if it passes the optimality check.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "tvtree/graph.hpp"

namespace tvtree {

struct FitOptions {
    double tol_change = 1e-12;
    double tol_kkt = 1e-8;
    long max_sweeps = 1'000'000;
    std::optional<Vector> warm_start;  // beta from a previous fit
};

struct FitResult {
    Vector f_hat;
    Vector beta_hat;
    double lambda = 0.0;
    double kkt_residual = 0.0;
    long iterations = 0;
    bool converged = false;
};

/// lambda = gamma sigma sqrt(2 log(4 (n - s - 1) / delta) / n).
inline double lambda_rule(int n, int s, double delta, double gamma, double sigma) {
    if (n < 2 || s < 0 || n - s - 1 < 1) throw Error(ErrorCode::BadParams, "need n - s - 1 >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::BadParams, "delta must lie in (0, 1)");
    if (!(gamma > 0.0) || !(sigma >= 0.0) || !std::isfinite(gamma) || !std::isfinite(sigma))
        throw Error(ErrorCode::BadParams, "gamma must be positive and sigma non-negative");
    return gamma * sigma * std::sqrt(2.0 * std::log(4.0 * (n - s - 1) / delta) / n);
}

/// max over coordinates of the violation of
/// (1/n) X^T (Y - X beta) = lambda z, z_1 = 0, z_j in sign(beta_j).
inline double kkt_residual(const TreeGraph& g, const Vector& y, const Vector& beta, double lambda) {
    const int n = g.n();
    if (y.size() != n || beta.size() != n) throw Error(ErrorCode::LengthMismatch, "length differs from n");
    Vector f = signal_from_coefficients(g, beta);
    Vector sub = y - f;
    const auto& order = g.preorder();
    for (int t = n - 1; t >= 1; --t) {
        int v = order[t];
        sub[g.parent(v) - 1] += sub[v - 1];
    }
    double worst = std::abs(sub[0]) / n;
    for (int v = 2; v <= n; ++v) {
        double gv = sub[v - 1] / n, b = beta[v - 1], r;
        if (b > 0)
            r = std::abs(gv - lambda);
        else if (b < 0)
            r = std::abs(gv + lambda);
        else
            r = std::max(0.0, std::abs(gv) - lambda);
        worst = std::max(worst, r);
    }
    return worst;
}

inline double kkt_check(const TreeGraph& g, const Vector& y, const FitResult& r) {
    return kkt_residual(g, y, r.beta_hat, r.lambda);
}

/// sign(D f^) with |.| <= tol treated as zero; entry v-2 belongs to edge v.
inline std::vector<int> jump_pattern(const TreeGraph& g, const Vector& f, double tol = 1e-9) {
    std::vector<int> p(g.n() - 1, 0);
    for (int v = 2; v <= g.n(); ++v) {
        double d = f[v - 1] - f[g.parent(v) - 1];
        p[v - 2] = d > tol ? 1 : (d < -tol ? -1 : 0);
    }
    return p;
}

namespace detail {

/// Range add / range sum over positions 0..n-1.
class RangeFenwick {
public:
    explicit RangeFenwick(int n) : n_(n), b1_(n + 1, 0.0), b2_(n + 1, 0.0) {}

    void assign(const std::vector<double>& values) {
        std::fill(b1_.begin(), b1_.end(), 0.0);
        std::fill(b2_.begin(), b2_.end(), 0.0);
        // difference array, then O(n) Fenwick construction
        for (int i = 0; i < n_; ++i) {
            double d = values[i] - (i ? values[i - 1] : 0.0);
            b1_[i + 1] += d;
            b2_[i + 1] += d * i;
        }
        for (int i = 1; i <= n_; ++i) {
            int j = i + (i & -i);
            if (j <= n_) {
                b1_[j] += b1_[i];
                b2_[j] += b2_[i];
            }
        }
    }
    void add(int lo, int hi, double x) {  // [lo, hi)
        point(lo, x);
        if (hi < n_) point(hi, -x);
    }
    double sum(int lo, int hi) const { return prefix(hi) - prefix(lo); }

private:
    void point(int i, double x) {
        const double xi = x * i;
        for (int k = i + 1; k <= n_; k += k & -k) {
            b1_[k] += x;
            b2_[k] += xi;
        }
    }
    double prefix(int m) const {  // sum of positions < m
        double s1 = 0.0, s2 = 0.0;
        for (int k = m; k > 0; k -= k & -k) {
            s1 += b1_[k];
            s2 += b2_[k];
        }
        return s1 * m - s2;
    }

    int n_;
    std::vector<double> b1_, b2_;
};

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

/// Minimiser over signals constant between the edges of `support`, with the
/// jump on edge v forced to sign z_v: group mean minus n lambda c_g / |g|.
inline Vector pattern_fit(const TreeGraph& g, const Vector& y, double lambda, const Vector& beta) {
    const int n = g.n();
    std::vector<int> comp(n + 1, 0);
    std::vector<double> sum, size, c;
    for (int v : g.preorder()) {
        if (v == 1 || beta[v - 1] != 0.0) {
            comp[v] = static_cast<int>(sum.size());
            sum.push_back(0.0);
            size.push_back(0.0);
            c.push_back(0.0);
        } else {
            comp[v] = comp[g.parent(v)];
        }
        sum[comp[v]] += y[v - 1];
        size[comp[v]] += 1.0;
    }
    for (int v = 2; v <= n; ++v) {
        double b = beta[v - 1];
        if (b == 0.0) continue;
        double z = b > 0 ? 1.0 : -1.0;
        c[comp[v]] += z;
        c[comp[g.parent(v)]] -= z;
    }
    Vector f(n);
    for (int v = 1; v <= n; ++v) {
        int k = comp[v];
        f[v - 1] = sum[k] / size[k] - n * lambda * c[k] / size[k];
    }
    return f;
}

}  // namespace detail

inline FitResult fit(const TreeGraph& g, const Vector& y, double lambda, const FitOptions& opt = {}) {
    const int n = g.n();
    if (y.size() != n) throw Error(ErrorCode::LengthMismatch, "response length differs from n");
    if (!y.allFinite()) throw Error(ErrorCode::NonFinite, "response has non-finite entries");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::BadParams, "lambda must be finite and >= 0");

    FitResult res;
    res.lambda = lambda;
    if (n == 1 || lambda == 0.0) {
        res.f_hat = y;
        res.beta_hat = rooted_differences(g, y);
        res.kkt_residual = kkt_residual(g, y, res.beta_hat, lambda);
        res.converged = true;
        return res;
    }

    const auto& order = g.preorder();
    const double ybar = y.mean();
    const double nl = n * lambda;

    Vector beta = Vector::Zero(n);
    if (opt.warm_start) {
        if (opt.warm_start->size() != n) throw Error(ErrorCode::LengthMismatch, "warm start length differs from n");
        beta = *opt.warm_start;
    }
    std::vector<double> colsq(n + 1, 0.0);
    for (int v = 2; v <= n; ++v) {
        double m = g.subtree_size(v);
        colsq[v] = m * (1.0 - m / n);
    }

    // r' = (Y - ybar) - X_{-1} beta_{-1}, by preorder position.
    detail::RangeFenwick resid(n);
    double total = 0.0;
    auto load = [&]() {
        Vector xb = signal_from_coefficients(g, [&] {
            Vector b = beta;
            b[0] = 0.0;
            return b;
        }());
        std::vector<double> vals(n);
        total = 0.0;
        for (int t = 0; t < n; ++t) {
            int v = order[t];
            vals[t] = y[v - 1] - ybar - xb[v - 1];
            total += vals[t];
        }
        resid.assign(vals);
    };
    load();

    auto finish = [&](const Vector& b) {
        res.beta_hat = b;
        Vector tail = b;
        tail[0] = 0.0;
        Vector xb = signal_from_coefficients(g, tail);
        res.beta_hat[0] = ybar - xb.mean();
        res.f_hat = signal_from_coefficients(g, res.beta_hat);
        res.kkt_residual = kkt_residual(g, y, res.beta_hat, lambda);
    };

    std::vector<int> prev_sign(n + 1, 2);
    for (long sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        double max_change = 0.0, scale = 0.0;
        for (int t = 1; t < n; ++t) {
            const int v = order[t];
            const int lo = g.tin(v), hi = g.tout(v);
            const double m = hi - lo;
            const double grad = resid.sum(lo, hi) - m * total / n + colsq[v] * beta[v - 1];
            const double nb = detail::soft_threshold(grad, nl) / colsq[v];
            const double delta = nb - beta[v - 1];
            if (delta != 0.0) {
                resid.add(lo, hi, -delta);
                total -= delta * m;
                beta[v - 1] = nb;
            }
            max_change = std::max(max_change, std::abs(delta));
            scale = std::max(scale, std::abs(nb));
        }
        res.iterations = sweep;

        bool same_pattern = true;
        for (int v = 2; v <= n; ++v) {
            int sg = beta[v - 1] > 0 ? 1 : (beta[v - 1] < 0 ? -1 : 0);
            if (sg != prev_sign[v]) same_pattern = false;
            prev_sign[v] = sg;
        }
        if (max_change <= opt.tol_change * std::max(1.0, scale)) {
            finish(beta);
            if (res.kkt_residual <= opt.tol_kkt) {
                res.converged = true;
                return res;
            }
        }
        if (same_pattern) {
            Vector f = detail::pattern_fit(g, y, lambda, beta);
            Vector cand = rooted_differences(g, f);
            bool consistent = true;
            for (int v = 2; v <= n && consistent; ++v) {
                if (beta[v - 1] == 0.0)
                    cand[v - 1] = 0.0;
                else if (cand[v - 1] * beta[v - 1] <= 0.0)
                    consistent = false;
            }
            if (consistent) {
                cand[0] = 0.0;
                beta = cand;
                load();
                // Restart the change test from the polished point.
                std::fill(prev_sign.begin(), prev_sign.end(), 2);
            }
        }
    }
    finish(beta);
    throw Error(ErrorCode::NotConverged, "coordinate descent hit the sweep limit; KKT residual " +
                                             std::to_string(res.kkt_residual));
}

}  // namespace tvtree
