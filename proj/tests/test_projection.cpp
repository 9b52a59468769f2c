#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tvtree/projection.hpp"

using namespace tvtree;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::BadConfig;
}

}  // namespace

// Hand-derived values for n = 8, S = {3, 7}.
TEST(LocalProjectionPath, HandValues) {
    auto g = path_graph(8);
    ActiveSet S(g, {3, 7});
    auto p5 = local_projection_path(8, S, 5);
    EXPECT_DOUBLE_EQ(p5.theta.at(3), 0.5);
    EXPECT_DOUBLE_EQ(p5.theta.at(7), 0.5);
    EXPECT_DOUBLE_EQ(p5.antiprojection_sq, 1.0);
    auto p2 = local_projection_path(8, S, 2);
    EXPECT_DOUBLE_EQ(p2.theta.at(1), 0.5);
    EXPECT_DOUBLE_EQ(p2.theta.at(3), 0.5);
    EXPECT_DOUBLE_EQ(p2.antiprojection_sq, 0.5);
    auto p8 = local_projection_path(8, S, 8);
    EXPECT_DOUBLE_EQ(p8.theta.at(7), 0.5);
    EXPECT_EQ(p8.theta.size(), 1u);
    EXPECT_DOUBLE_EQ(p8.antiprojection_sq, 0.5);
    EXPECT_EQ(code_of([&] { local_projection_path(8, S, 3); }), ErrorCode::IndexInActiveSet);
    EXPECT_EQ(code_of([&] { local_projection_path(8, S, 9); }), ErrorCode::OffsetOutOfRange);
}

TEST(LocalProjectionPath, MatchesLeastSquares) {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 30);
        auto g = path_graph(n);
        std::vector<int> s;
        for (int v = 2; v <= n; ++v)
            if (rng() % 4 == 0) s.push_back(v);
        ActiveSet S(g, s);
        for (int j = 2; j <= n; ++j) {
            if (S.contains(j)) continue;
            auto a = local_projection_path(n, S, j);
            auto b = direct_projection(g, S, j);
            for (const auto& [col, th] : b.theta) {
                double expect = a.theta.count(col) ? a.theta.at(col) : 0.0;
                EXPECT_NEAR(th, expect, 1e-10);
            }
            EXPECT_NEAR(a.antiprojection_sq, b.antiprojection_sq, 1e-10);
        }
    }
}

TEST(LocalProjectionBranch, MatchesLeastSquaresOnStars) {
    // Branched path with jumps on both sides of the ramification point.
    auto g = branched_path(12, 6, 6);
    ActiveSet S(g, {3, 9, 15});
    auto bd = branching_descriptor(g, S, 6);
    ASSERT_EQ(bd.b, (std::vector<int>{4, 2, 2}));
    auto check = [&](int j, int l, int i) {
        auto bp = local_projection_branch(bd, l, i);
        auto dp = direct_projection(g, S, j);
        for (int k = 0; k <= bd.K(); ++k) EXPECT_NEAR(dp.theta.at(bd.surrounding[k]), bp.theta[k], 1e-10) << j;
        EXPECT_NEAR(dp.antiprojection_sq, bp.antiprojection_sq, 1e-10);
    };
    for (int i = 1; i <= 3; ++i) check(3 + i, 0, i);
    for (int i = 1; i <= 2; ++i) check(9 - i, 1, i);
    for (int i = 1; i <= 2; ++i) check(15 - i, 2, i);
    EXPECT_EQ(code_of([&] { local_projection_branch(bd, 0, 4); }), ErrorCode::OffsetOutOfRange);
    EXPECT_EQ(code_of([&] { local_projection_branch(bd, 3, 1); }), ErrorCode::OffsetOutOfRange);
}

TEST(Weights, HandValue) {
    auto g = path_graph(8);
    ActiveSet S(g, {3, 7});
    auto wv = weight_vectors(g, S, 2.0);
    EXPECT_NEAR(wv.omega[4], 1.0 / std::sqrt(8.0), 1e-15);
    EXPECT_NEAR(wv.w[4], 0.82322330470336313, 1e-12);
    EXPECT_DOUBLE_EQ(wv.w[0], 1.0);
    EXPECT_DOUBLE_EQ(wv.w[2], 1.0);
    EXPECT_EQ(code_of([&] { weight_vectors(g, S, 1.0); }), ErrorCode::BadGamma);
}

TEST(Weights, TreeRouteMatchesDense) {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 4 + static_cast<int>(rng() % 20);
        auto g = oracle::random_tree(n, rng);
        std::vector<int> s;
        for (int v = 2; v <= n; ++v)
            if (rng() % 3 == 0) s.push_back(v);
        ActiveSet S(g, s);
        auto wv = weight_vectors(g, S, 1.5);
        Matrix X = oracle::design(g);
        Matrix XA(n, S.size() + 1);
        XA.col(0) = X.col(0);
        for (int k = 0; k < S.size(); ++k) XA.col(k + 1) = X.col(S.vertices[k] - 1);
        Matrix H = XA * (XA.transpose() * XA).inverse() * XA.transpose();
        for (int j = 2; j <= n; ++j) {
            double om = (X.col(j - 1) - H * X.col(j - 1)).norm() / std::sqrt(double(n));
            EXPECT_NEAR(wv.omega[j - 1], om, 1e-10);
        }
    }
}
