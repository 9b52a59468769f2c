// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "oracles.hpp"
#include "tvtree/cli.hpp"
#include "tvtree/compatibility.hpp"
#include "tvtree/estimator.hpp"
#include "tvtree/irrep.hpp"
#include "tvtree/oracle.hpp"
#include "tvtree/projection.hpp"

using namespace tvtree;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok && pass) detail << "first failure: " << what << "; ";
        pass = pass && ok;
    }
};

int failures = 0;

template <class F>
void criterion(int id, const char* title, F&& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << "exception: " << e.what() << "; ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%s%.1fs)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.str().c_str(), secs);
    std::fflush(stdout);
}

Vector coefficients(int n, const std::vector<std::pair<int, double>>& jumps) {
    Vector b = Vector::Zero(n);
    for (auto [v, h] : jumps) b[v - 1] = h;
    return b;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::string interval(double successes, double trials) {
    auto [lo, hi] = wilson_interval(successes, trials);
    return fmt(successes / trials) + " [" + fmt(lo) + ", " + fmt(hi) + "]";
}

// All subsets of {lo..hi} with at most k elements, excluding the empty set.
std::vector<std::vector<int>> small_subsets(int lo, int hi, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int from) -> void {
        if (!cur.empty()) out.push_back(cur);
        if (static_cast<int>(cur.size()) == k) return;
        for (int v = from; v <= hi; ++v) {
            cur.push_back(v);
            self(self, v + 1);
            cur.pop_back();
        }
    };
    rec(rec, lo);
    return out;
}

std::vector<std::vector<int>> sign_patterns(int k) {
    std::vector<std::vector<int>> out;
    for (int m = 0; m < (1 << k); ++m) {
        std::vector<int> z(k);
        for (int i = 0; i < k; ++i) z[i] = (m >> i) & 1 ? 1 : -1;
        out.push_back(z);
    }
    return out;
}

// ---------------------------------------------------------------------------

void exact_inversion(Outcome& o) {
    std::mt19937_64 rng(101);
    int trees = 0;
    for (int rep = 0; rep < 500; ++rep) {
        const int n = 1 + static_cast<int>(rng() % 64);
        TreeGraph g = rep % 5 == 0 ? path_graph(n) : oracle::random_tree(n, rng);
        IntMatrix prod = rooted_incidence(g) * path_matrix(g);
        o.check(prod == IntMatrix::Identity(n, n), "tree " + std::to_string(rep));
        ++trees;
    }
    o.detail << trees << " trees, n <= 64; ";
}

void projection_locality(Outcome& o) {
    std::mt19937_64 rng(202);
    auto uni = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
    double worst = 0.0;
    long columns = 0;
    auto compare = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    for (int rep = 0; rep < 150; ++rep) {
        const int n = uni(3, 50);
        auto g = path_graph(n);
        std::vector<int> s;
        for (int v = 2; v <= n; ++v)
            if (uni(0, 4) == 0) s.push_back(v);
        ActiveSet S(g, s);
        for (int j = 2; j <= n; ++j) {
            if (S.contains(j)) continue;
            auto loc = local_projection_path(n, S, j);
            auto dir = direct_projection(g, S, j);
            for (const auto& [col, th] : dir.theta) compare(th, loc.theta.count(col) ? loc.theta.at(col) : 0.0);
            compare(loc.antiprojection_sq, dir.antiprojection_sq);
            ++columns;
        }
    }
    for (int rep = 0; rep < 150; ++rep) {
        // Branched path with a jump on every side of the ramification point.
        const int n1 = uni(4, 35), n2 = uni(2, 50 - n1), b = uni(2, n1 - 2);
        auto g = branched_path(n1, n2, b);
        std::vector<int> s{uni(2, b), uni(b + 1, n1), uni(n1 + 1, n1 + n2)};
        for (int v = 2; v <= n1 + n2; ++v)
            if (uni(0, 9) == 0) s.push_back(v);
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        ActiveSet S(g, s);
        auto bd = branching_descriptor(g, S, b);
        o.check(bd.local, "descriptor not local");
        auto check = [&](int j, int l, int i) {
            auto bp = local_projection_branch(bd, l, i);
            auto dir = direct_projection(g, S, j);
            for (const auto& [col, th] : dir.theta) {
                double expect = 0.0;
                for (int k = 0; k <= bd.K(); ++k)
                    if (bd.surrounding[k] == col) expect = bp.theta[k];
                compare(th, expect);
            }
            compare(bp.antiprojection_sq, dir.antiprojection_sq);
            ++columns;
        };
        for (int i = 1; i <= bd.b[0] - 1; ++i) check(bd.surrounding[0] + i, 0, i);
        for (int l = 1; l <= bd.K(); ++l)
            for (int i = 1; i <= bd.b[l]; ++i) check(bd.surrounding[l] - i, l, i);
    }
    o.check(worst <= 1e-10, "max deviation " + fmt(worst));
    o.detail << "300 instances, " << columns << " columns, max deviation " << fmt(worst) << "; ";
}

void compatibility(Outcome& o) {
    long path_cases = 0, even_cases = 0, branched_cases = 0, weighted_cases = 0;
    double worst_gap = 0.0;
    const std::vector<double> gammas{1.01, 2.0};
    auto weighted = [&](const TreeGraph& g, const ActiveSet& S, const SegmentDecomposition& dec) {
        for (double gamma : gammas) {
            auto w = weight_vectors(g, S, gamma).w;
            auto wb = kappa_lower_weighted(g, dec, w);
            const double exact = kappa_exact(g, S, w).kappa_sq;
            o.check(exact >= wb.lower_bound - 1e-9, "weighted dominance");
            o.check(wb.lower_bound >= wb.simplified - 1e-12, "weighted forms ordered");
            ++weighted_cases;
        }
    };
    for (int n = 2; n <= 12; ++n) {
        auto g = path_graph(n);
        for (const auto& s : small_subsets(2, n, 3)) {
            ActiveSet S(g, s);
            auto dec = decompose(g, S);
            if (!dec.valid_for_bounds()) continue;
            const double bound = kappa_lower_path(dec).lower_bound;
            const double exact = kappa_exact(g, S).kappa_sq;
            o.check(exact >= bound - 1e-9, "path dominance n=" + std::to_string(n));
            ++path_cases;
            bool even = true;
            const auto& gaps = dec.segments[0].gaps;
            for (std::size_t j = 1; j + 1 < gaps.size(); ++j) even = even && gaps[j] % 2 == 0;
            if (even) {
                worst_gap = std::max(worst_gap, std::abs(exact - bound));
                o.check(std::abs(exact - bound) <= 1e-8, "tightness n=" + std::to_string(n));
                o.check(std::abs(tight_witness(g, dec).objective - bound) <= 1e-8, "witness n=" + std::to_string(n));
                ++even_cases;
            }
            if (n % 3 == 0) weighted(g, S, dec);
        }
    }
    {
        auto g = path_graph(8);
        ActiveSet S(g, {3, 7});
        const double exact = kappa_exact(g, S).kappa_sq;
        o.check(std::abs(exact - 3.0 / 16.0) <= 1e-8, "n=8 exact value " + fmt(exact));
    }
    for (int n1 = 3; n1 <= 11; ++n1)
        for (int n2 = 1; n1 + n2 <= 12; ++n2)
            for (int b = 2; b < n1; ++b) {
                auto g = branched_path(n1, n2, b);
                const int n = n1 + n2;
                for (const auto& s : small_subsets(2, n, 3)) {
                    ActiveSet S(g, s);
                    SegmentDecomposition dec;
                    try {
                        dec = decompose(g, S);
                    } catch (const Error&) {
                        continue;
                    }
                    if (!dec.valid_for_bounds()) continue;
                    const double bound = kappa_lower_branched(dec).lower_bound;
                    const double exact = kappa_exact(g, S).kappa_sq;
                    o.check(exact >= bound - 1e-9, "branched dominance");
                    ++branched_cases;
                    if (n == 12) weighted(g, S, dec);
                }
            }
    o.detail << path_cases << " path sets (" << even_cases << " tight, max |exact-bound| " << fmt(worst_gap) << "), "
             << branched_cases << " branched sets, " << weighted_cases << " weighted checks; ";
}

// Single ramification point r with K outbound branches. A region is closed
// by a jump unless `closed` says it reaches the root (region 0) or a leaf.
struct Star {
    TreeGraph g;
    std::vector<int> jumps;
};

Star build_star(const std::vector<int>& b, const std::vector<bool>& open) {
    std::vector<int> parent{0, 0};
    auto add = [&](int p) {
        parent.push_back(p);
        return static_cast<int>(parent.size()) - 1;
    };
    Star st;
    int cur = 1;
    if (open[0]) {
        for (int i = 1; i < b[0]; ++i) cur = add(cur);
    } else {
        cur = add(cur);  // one vertex above the inbound jump
        cur = add(cur);
        st.jumps.push_back(cur);
        for (int i = 1; i < b[0]; ++i) cur = add(cur);
    }
    const int r = cur;
    for (std::size_t l = 1; l < b.size(); ++l) {
        int v = r;
        for (int i = 0; i < b[l]; ++i) v = add(v);
        if (!open[l]) {
            v = add(v);
            st.jumps.push_back(v);
            add(v);  // tail below the jump
        }
    }
    st.g = TreeGraph::from_parent_vector(parent);
    return st;
}

void irrepresentable(Outcome& o) {
    long path_cases = 0, staircase = 0, star_cases = 0, closure_cases = 0;
    double worst_boundary = 0.0;
    for (int n = 2; n <= 10; ++n) {
        auto g = path_graph(n);
        for (const auto& s : small_subsets(2, n, 3)) {
            if (static_cast<int>(s.size()) + 1 >= n) continue;
            ActiveSet S(g, s);
            for (const auto& z : sign_patterns(static_cast<int>(s.size()))) {
                const double lhs = irrep_lhs(g, S, z);
                const bool numeric = lhs <= 1.0 - kIrrepMargin;
                const auto v = irrep_check_path(s, z);
                o.check(numeric == v.satisfied, "path n=" + std::to_string(n) + " lhs " + fmt(lhs));
                if (!v.satisfied) {
                    worst_boundary = std::max(worst_boundary, std::abs(lhs - 1.0));
                    o.check(std::abs(lhs - 1.0) <= 1e-9, "staircase lhs " + fmt(lhs));
                    ++staircase;
                }
                ++path_cases;
            }
        }
    }
    for (int K = 2; K <= 3; ++K) {
        std::vector<int> b(K + 1, 0);
        auto rec = [&](auto&& self, int l, int sum) -> void {
            if (l == K + 1) {
                for (int mask = 0; mask < (1 << (K + 1)); ++mask) {
                    std::vector<bool> open(K + 1);
                    bool ok = true;
                    for (int k = 0; k <= K; ++k) {
                        open[k] = (mask >> k) & 1;
                        if (open[k] && (k == 0 ? b[0] < 2 : b[k] < 1)) ok = false;
                    }
                    if (!ok) continue;
                    Star st = build_star(b, open);
                    ActiveSet S(st.g, st.jumps);
                    if (S.empty()) continue;
                    for (const auto& z : sign_patterns(S.size())) {
                        auto rep = irrep_report(st.g, S, z);
                        const bool numeric = rep.lhs <= 1.0 - kIrrepMargin;
                        o.check(rep.analytic.has_value(), "star without analytic verdict");
                        o.check(rep.analytic.value_or(!numeric) == numeric,
                                "star K=" + std::to_string(K) + " b1=" + std::to_string(b[0]) + " lhs " + fmt(rep.lhs));
                        (mask == 0 ? star_cases : closure_cases) += 1;
                    }
                }
                return;
            }
            for (int x = (l == 0 ? 1 : 0); sum + x <= 12; ++x) {
                b[l] = x;
                self(self, l + 1, sum + x);
            }
        };
        rec(rec, 0, 0);
    }
    o.detail << path_cases << " path cases (" << staircase << " staircase, max |lhs-1| " << fmt(worst_boundary) << "), "
             << star_cases << " star cases, " << closure_cases << " with root/leaf closures; ";
}

void solver(Outcome& o) {
    std::mt19937_64 rng(505);
    std::normal_distribution<double> nd;
    double worst_obj = 0.0, worst_kkt = 0.0;
    long fits = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 7);
        auto g = oracle::random_tree(n, rng);
        Vector y(n);
        for (int i = 0; i < n; ++i) y[i] = nd(rng) + ((rng() % 3 == 0) ? 2.0 : 0.0);
        const double lam = 0.5 * std::uniform_real_distribution<double>()(rng);
        auto r = fit(g, y, lam);
        const Vector ref = oracle::lasso_exhaustive(g, y, lam);
        const double diff = std::abs(oracle::objective(g, y, r.f_hat, lam) - oracle::objective(g, y, ref, lam));
        worst_obj = std::max(worst_obj, diff);
        o.check(diff <= 1e-7, "oracle objective differs by " + fmt(diff));
        worst_kkt = std::max(worst_kkt, r.kkt_residual);
        o.check(r.converged && r.kkt_residual <= 1e-8, "kkt small tree");
        ++fits;
    }
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 20 + static_cast<int>(rng() % 280);
        auto g = rep % 2 ? path_graph(n) : oracle::random_tree(n, rng);
        Vector f0 = Vector::Zero(n);
        for (int v = 2; v <= n; ++v) f0[v - 1] = f0[g.parent(v) - 1] + (rng() % 25 == 0 ? nd(rng) * 3 : 0.0);
        Vector y = f0 + gaussian_vector(rep, n);
        const double lam = std::pow(10.0, -2.5 + 2.0 * std::uniform_real_distribution<double>()(rng));
        auto r = fit(g, y, lam);
        const double k = kkt_check(g, y, r);
        worst_kkt = std::max(worst_kkt, k);
        o.check(r.converged && k <= 1e-8, "kkt n=" + std::to_string(n) + " residual " + fmt(k));
        ++fits;
    }
    Vector y2(2);
    y2 << 0.0, 1.0;
    auto two = fit(path_graph(2), y2, 0.1);
    const double err = std::max(std::abs(two.f_hat[0] - 0.2), std::abs(two.f_hat[1] - 0.8));
    o.check(err <= 1e-10, "two-point error " + fmt(err));
    o.detail << fits << " fits, max KKT " << fmt(worst_kkt) << ", max objective gap to oracle " << fmt(worst_obj)
             << ", two-point error " << fmt(err) << "; ";
}

void oracle_mc(Outcome& o) {
    const int n = 200;
    auto g = path_graph(n);
    Vector f0 = signal_from_coefficients(g, coefficients(n, {{51, 5.0}, {101, -5.0}, {151, 5.0}}));
    BoundParams p{1.0, 0.1, 1.01};
    auto sim = simulate_oracle(g, f0, p, 500, 20240601);
    double holds = 0.0, worst_ratio = 0.0;
    for (const auto& r : sim.rows) {
        holds += r.bound_holds;
        worst_ratio = std::max(worst_ratio, r.mse / r.bound_rhs);
    }
    o.check(sim.hold_rate >= 0.9, "hold rate " + fmt(sim.hold_rate));
    o.detail << "hold rate " << interval(holds, 500) << ", bound " << fmt(sim.bound_rhs) << ", kappa_w^2 lower "
             << fmt(sim.kappa_w_sq) << ", max mse/bound " << fmt(worst_ratio) << "; ";
}

void recovery_mc(Outcome& o) {
    const int n = 400, R = 500;
    const double sigma = 1.0, h = 8.0;
    auto g = path_graph(n);
    Vector stair = signal_from_coefficients(g, coefficients(n, {{101, h}, {201, h}, {301, h}}));
    Vector alt = signal_from_coefficients(g, coefficients(n, {{101, h}, {201, -h}, {301, h}}));
    const double rule = lambda_rule(n, 3, 0.1, 1.01, sigma);
    std::vector<double> grid;
    for (int k = 0; k < 20; ++k) grid.push_back(rule * std::pow(40.0, k / 19.0) / 10.0);
    const auto fs = pattern_recovery_frequencies(g, stair, sigma, grid, R, 77);
    const auto fa = pattern_recovery_frequencies(g, alt, sigma, grid, R, 77);
    const auto is = std::max_element(fs.begin(), fs.end()) - fs.begin();
    const auto ia = std::max_element(fa.begin(), fa.end()) - fa.begin();
    int pointwise = 0;
    for (int k = 0; k < 20; ++k) pointwise += fa[k] >= fs[k];
    o.check(fs[is] <= 0.9, "staircase best " + fmt(fs[is]));
    o.check(fs[is] <= fa[ia], "staircase best above alternating best");
    o.detail << "staircase best " << interval(fs[is] * R, R) << " at lambda " << fmt(grid[is]) << ", alternating best "
             << interval(fa[ia] * R, R) << " at lambda " << fmt(grid[ia]) << ", alternating >= staircase at "
             << pointwise << "/20 grid points; ";
}

void zeta_table(Outcome& o) {
    // main 1..20, side 21..30 off vertex 10; jumps x (inbound), y (main), z (side)
    struct Row {
        int x, y, z;
        BranchCase expect;
        double zeta;
    };
    const std::vector<Row> rows{
        {7, 14, 24, BranchCase::Case1, 0.0},   // b = 4, 3, 3
        {7, 11, 24, BranchCase::Case2, 3.5},   // b = 4, 0, 3
        {10, 13, 25, BranchCase::Case3a, 3.0}, // b = 1, 2, 4
        {10, 14, 25, BranchCase::Case3b, 2.0}, // b = 1, 3, 4
        {7, 12, 24, BranchCase::Case4, 2.0},   // b = 4, 1, 3
    };
    auto g = branched_path(20, 10, 10);
    std::vector<std::string> seen;
    for (const auto& r : rows) {
        ActiveSet S(g, {r.x, r.y, r.z});
        auto bd = branching_descriptor(g, S, 10);
        auto c = classify_branch_case(bd);
        o.check(c == r.expect, std::string("case ") + branch_case_name(c));
        o.check(classify_branch_case(bd.b[0], bd.b[1], bd.b[2]) == r.expect, "case from counts");
        auto bg = branched_gaps(20, 10, 10, {r.x, r.y, r.z});
        o.check(bg.b_star() == bd.b_star(), "b* from gap sequence");
        o.check(std::abs(zeta(c, bd.b_star()) - r.zeta) < 1e-15, "zeta value");
        seen.push_back(branch_case_name(c));
    }
    o.check(classify_branch_case(3, 3, 3) == BranchCase::Case1, "(3,3,3)");
    bool unsupported = false;
    try {
        classify_branch_case(0, 2, 2);
    } catch (const Error& e) {
        unsupported = e.code() == ErrorCode::UnsupportedConfiguration;
    }
    o.check(unsupported, "b1 = 0 rejected");
    o.detail << "labels";
    for (const auto& s : seen) o.detail << " " << s;
    o.detail << "; ";
}

std::string run_cli(const std::string& args) {
    std::string out;
    FILE* pipe = popen((std::string(TVTREE_CLI_PATH) + " " + args).c_str(), "r");
    if (!pipe) throw std::runtime_error("cannot start the command-line tool");
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    int status = pclose(pipe);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw std::runtime_error("command failed: " + args);
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism(Outcome& o) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto a = dir / "tvtree_acceptance_a.csv", b = dir / "tvtree_acceptance_b.csv";
    const auto sa = dir / "tvtree_acceptance_a.json", sb = dir / "tvtree_acceptance_b.json";
    const std::string args =
        "simulate --path 200 --jumps 51:5,101:-5,151:5 --sigma 1 --delta 0.1 --gamma 1.01 --replicates 100 --seed 42";
    run_cli(args + " --csv " + a.string() + " --summary " + sa.string());
    run_cli(args + " --csv " + b.string() + " --summary " + sb.string());
    const std::string ca = slurp(a), cb = slurp(b);
    o.check(!ca.empty() && ca == cb, "CSV differs between runs");
    o.check(slurp(sa) == slurp(sb), "summary differs between runs");
    auto cfg = cli::json::parse(R"({"graph": {"type": "path", "n": 200},
        "signal": {"jumps": {"51": 5, "101": -5, "151": 5}},
        "sigma": 1, "delta": 0.1, "gamma": 1.01, "replicates": 100, "seed": 42})");
    const auto l1 = cli::cmd_simulate(cfg), l2 = cli::cmd_simulate(cfg);
    o.check(l1.csv == l2.csv && l1.summary.dump() == l2.summary.dump(), "library output differs between runs");
    o.check(l1.csv == ca, "library and command-line output differ");
    o.detail << ca.size() << " CSV bytes identical; ";
}

}  // namespace

int main() {
    criterion(1, "exact inversion of the rooted incidence matrix", exact_inversion);
    criterion(2, "projection locality", projection_locality);
    criterion(3, "compatibility dominance and tightness", compatibility);
    criterion(4, "irrepresentable equivalence", irrepresentable);
    criterion(5, "solver correctness", solver);
    criterion(6, "oracle inequality Monte Carlo", oracle_mc);
    criterion(7, "pattern recovery phenomenology", recovery_mc);
    criterion(8, "branch cases and zeta table", zeta_table);
    criterion(9, "determinism of simulate", determinism);
    return failures == 0 ? 0 : 1;
}
