#pragma once

// Command implementations behind the tvtree tool. Every command takes the
// merged JSON configuration and returns JSON (plus CSV for simulate), so the
// same code is exercised by the tool and by the tests.
//
// Configuration keys:
//   graph       {"type": "path", "n": N}
//               {"type": "branched", "n1": .., "n2": .., "b": ..}
//               {"type": "random", "n": N, "seed": S}
//               {"n": N, "parents": {"2": 1, ...}}
//   signal      {"values": [...]} or {"base": c, "jumps": {"51": 1.0, ...}}
//   y           observations for fit
//   active_set  [v, ...] (defaults to the jumps of the signal)
//   cut_edges   [v, ...] decomposition override
//   sigma, delta, gamma, lambda ("rule" or a number), replicates, seed

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tvtree/compatibility.hpp"
#include "tvtree/estimator.hpp"
#include "tvtree/graph.hpp"
#include "tvtree/irrep.hpp"
#include "tvtree/oracle.hpp"
#include "tvtree/projection.hpp"
#include "tvtree/rng.hpp"

namespace tvtree::cli {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// 0 success, 2 rejected input or unsupported request, 3 solver did not
/// converge, 1 anything else.
inline int exit_code_for(const Error& e) { return e.code() == ErrorCode::NotConverged ? 3 : 2; }

// ---------------------------------------------------------------------------
// Parsing

inline int to_label(const std::string& key) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(key, &pos);
    } catch (const std::exception&) {
        throw Error(ErrorCode::BadLabels, "vertex label '" + key + "' is not an integer");
    }
    if (pos != key.size()) throw Error(ErrorCode::BadLabels, "vertex label '" + key + "' is not an integer");
    return v;
}

inline TreeGraph random_tree(int n, std::uint64_t seed) {
    if (n < 1) throw Error(ErrorCode::BadConfig, "random tree needs n >= 1");
    CounterRng rng(replicate_key(seed, 0));
    std::vector<int> p(n + 1, 0);
    for (int v = 2; v <= n; ++v) p[v] = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(v - 1));
    return TreeGraph::from_parent_vector(p);
}

inline TreeGraph graph_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::BadConfig, "graph must be an object");
    if (j.contains("parents")) {
        if (!j.contains("n") || !j["n"].is_number_integer()) throw Error(ErrorCode::BadConfig, "graph.n must be an integer");
        const auto& pj = j["parents"];
        if (!pj.is_object()) throw Error(ErrorCode::BadConfig, "graph.parents must be an object");
        std::map<int, int> parents;
        for (auto it = pj.begin(); it != pj.end(); ++it) {
            if (!it.value().is_number_integer()) throw Error(ErrorCode::BadConfig, "parent labels must be integers");
            parents[to_label(it.key())] = it.value().get<int>();
        }
        return TreeGraph::from_parents(parents, j["n"].get<int>());
    }
    const std::string type = j.value("type", "");
    auto geti = [&](const char* k) {
        if (!j.contains(k) || !j[k].is_number_integer())
            throw Error(ErrorCode::BadConfig, std::string("graph.") + k + " must be an integer");
        return j[k].get<int>();
    };
    if (type == "path") return path_graph(geti("n"));
    if (type == "branched") return branched_path(geti("n1"), geti("n2"), geti("b"));
    if (type == "random") return random_tree(geti("n"), j.value("seed", std::uint64_t{0}));
    throw Error(ErrorCode::BadConfig, "unknown graph type '" + type + "'");
}

inline json graph_to_json(const TreeGraph& g) {
    json parents = json::object();
    for (int v = 2; v <= g.n(); ++v) parents[std::to_string(v)] = g.parent(v);
    return json{{"n", g.n()}, {"parents", parents}};
}

inline Vector vector_from_json(const json& j, int n, const char* what) {
    if (!j.is_array()) throw Error(ErrorCode::BadConfig, std::string(what) + " must be an array");
    if (static_cast<int>(j.size()) != n)
        throw Error(ErrorCode::LengthMismatch, std::string(what) + " must have n = " + std::to_string(n) + " entries");
    Vector v(n);
    for (int i = 0; i < n; ++i) {
        if (!j[i].is_number()) throw Error(ErrorCode::BadConfig, std::string(what) + " entries must be numbers");
        v[i] = j[i].get<double>();
    }
    if (!v.allFinite()) throw Error(ErrorCode::NonFinite, std::string(what) + " has non-finite entries");
    return v;
}

inline Vector signal_from_json(const TreeGraph& g, const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::BadConfig, "signal must be an object");
    if (j.contains("values")) return vector_from_json(j["values"], g.n(), "signal.values");
    Vector beta = Vector::Zero(g.n());
    if (j.contains("base")) {
        if (!j["base"].is_number()) throw Error(ErrorCode::BadConfig, "signal.base must be a number");
        beta[0] = j["base"].get<double>();
    }
    if (j.contains("jumps")) {
        const auto& jj = j["jumps"];
        if (!jj.is_object()) throw Error(ErrorCode::BadConfig, "signal.jumps must be an object");
        for (auto it = jj.begin(); it != jj.end(); ++it) {
            int v = to_label(it.key());
            if (v < 2 || v > g.n()) throw Error(ErrorCode::InvalidActiveSet, "jump edge " + it.key() + " out of range");
            if (!it.value().is_number()) throw Error(ErrorCode::BadConfig, "jump sizes must be numbers");
            beta[v - 1] = it.value().get<double>();
        }
    }
    return signal_from_coefficients(g, beta);
}

struct Problem {
    TreeGraph g;
    std::optional<Vector> f0;
    std::optional<Vector> y;
    std::optional<ActiveSet> S;
    std::optional<std::vector<int>> cuts;
    BoundParams params;
    bool sigma_given = false;
    bool gamma_given = false;
    std::optional<double> lambda;  // empty means "rule"
    int replicates = 100;
    std::uint64_t seed = 0;
};

inline std::vector<int> int_list(const json& j, const char* what) {
    if (!j.is_array()) throw Error(ErrorCode::BadConfig, std::string(what) + " must be an array");
    std::vector<int> out;
    for (const auto& x : j) {
        if (!x.is_number_integer()) throw Error(ErrorCode::BadConfig, std::string(what) + " entries must be integers");
        out.push_back(x.get<int>());
    }
    return out;
}

inline double number(const json& cfg, const char* key, double fallback) {
    if (!cfg.contains(key)) return fallback;
    if (!cfg[key].is_number()) throw Error(ErrorCode::BadConfig, std::string(key) + " must be a number");
    return cfg[key].get<double>();
}

inline Problem load_problem(const json& cfg) {
    if (!cfg.is_object()) throw Error(ErrorCode::BadConfig, "configuration must be a JSON object");
    if (!cfg.contains("graph")) throw Error(ErrorCode::BadConfig, "missing graph");
    Problem p;
    p.g = graph_from_json(cfg["graph"]);
    if (cfg.contains("signal")) p.f0 = signal_from_json(p.g, cfg["signal"]);
    if (cfg.contains("y")) p.y = vector_from_json(cfg["y"], p.g.n(), "y");
    if (cfg.contains("active_set"))
        p.S = ActiveSet(p.g, int_list(cfg["active_set"], "active_set"));
    else if (p.f0)
        p.S = jump_set(p.g, *p.f0);
    if (cfg.contains("cut_edges")) p.cuts = int_list(cfg["cut_edges"], "cut_edges");
    p.sigma_given = cfg.contains("sigma");
    p.gamma_given = cfg.contains("gamma");
    p.params.sigma = number(cfg, "sigma", 1.0);
    p.params.delta = number(cfg, "delta", 0.1);
    p.params.gamma = number(cfg, "gamma", 1.01);
    if (cfg.contains("lambda")) {
        const auto& l = cfg["lambda"];
        if (l.is_string()) {
            if (l.get<std::string>() != "rule") throw Error(ErrorCode::BadConfig, "lambda must be a number or \"rule\"");
        } else if (l.is_number()) {
            p.lambda = l.get<double>();
        } else {
            throw Error(ErrorCode::BadConfig, "lambda must be a number or \"rule\"");
        }
    }
    if (cfg.contains("replicates")) {
        if (!cfg["replicates"].is_number_integer() || cfg["replicates"].get<long long>() < 1)
            throw Error(ErrorCode::BadConfig, "replicates must be a positive integer");
        p.replicates = cfg["replicates"].get<int>();
    }
    if (cfg.contains("seed")) {
        if (!cfg["seed"].is_number_unsigned()) throw Error(ErrorCode::BadConfig, "seed must be a non-negative integer");
        p.seed = cfg["seed"].get<std::uint64_t>();
    }
    return p;
}

inline json vec_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json header(const char* command, const json& cfg) {
    return json{{"schema_version", kSchemaVersion}, {"command", command}, {"config", cfg}};
}

inline json decomposition_json(const SegmentDecomposition& dec) {
    json segs = json::array();
    for (const auto& s : dec.segments)
        segs.push_back({{"vertices", s.vertices}, {"jumps", s.jumps}, {"gaps", s.gaps}, {"valid", s.valid()}});
    return json{{"g", dec.g()},
                {"cut_edges", dec.cut_edges},
                {"segments", segs},
                {"valid_for_bounds", dec.valid_for_bounds()},
                {"large_enough", dec.large_enough()},
                {"sparse_enough", dec.sparse_enough()}};
}

inline const ActiveSet& require_S(const Problem& p) {
    if (!p.S) throw Error(ErrorCode::BadConfig, "need active_set or signal");
    return *p.S;
}

// ---------------------------------------------------------------------------
// Commands

inline json cmd_fit(const json& cfg) {
    Problem p = load_problem(cfg);
    Vector y;
    if (p.y) {
        y = *p.y;
    } else if (p.f0) {
        y = noisy_observation(*p.f0, p.params.sigma, replicate_key(p.seed, 0));
    } else {
        throw Error(ErrorCode::BadConfig, "fit needs y or a signal to sample from");
    }
    const double lambda =
        p.lambda ? *p.lambda : lambda_rule(p.g.n(), p.S ? p.S->size() : 0, p.params.delta, p.params.gamma, p.params.sigma);
    FitOptions opt;
    if (cfg.contains("max_sweeps")) {
        if (!cfg["max_sweeps"].is_number_integer() || cfg["max_sweeps"].get<long>() < 1)
            throw Error(ErrorCode::BadConfig, "max_sweeps must be a positive integer");
        opt.max_sweeps = cfg["max_sweeps"].get<long>();
    }
    auto res = fit(p.g, y, lambda, opt);
    json pattern = json::object();
    auto pat = jump_pattern(p.g, res.f_hat);
    for (int v = 2; v <= p.g.n(); ++v)
        if (pat[v - 2] != 0) pattern[std::to_string(v)] = pat[v - 2];
    json out = header("fit", cfg);
    out["lambda"] = lambda;
    out["converged"] = res.converged;
    out["iterations"] = res.iterations;
    out["kkt_residual"] = res.kkt_residual;
    out["y"] = vec_json(y);
    out["f_hat"] = vec_json(res.f_hat);
    out["beta_hat"] = vec_json(res.beta_hat);
    out["jumps"] = pattern;
    return out;
}

inline json cmd_kappa(const json& cfg) {
    Problem p = load_problem(cfg);
    const ActiveSet& S = require_S(p);
    if (S.empty()) throw Error(ErrorCode::EmptyS, "kappa needs a non-empty active set");
    json out = header("kappa", cfg);
    out["n"] = p.g.n();
    out["s"] = S.size();
    out["active_set"] = S.vertices;
    auto dec = decompose(p.g, S, p.cuts);
    out["decomposition"] = decomposition_json(dec);
    std::optional<double> bound;
    if (dec.valid_for_bounds()) {
        bound = detail::kappa_bound_checked(dec).lower_bound;
        out["K"] = decomposition_k(dec);
        out["lower_bound"] = *bound;
    } else {
        out["lower_bound"] = nullptr;
    }
    if (p.g.n() <= kExactKappaMaxN) out["kappa_sq_exact"] = kappa_exact(p.g, S).kappa_sq;
    bool tight = false;
    try {
        auto w = tight_witness(p.g, dec);
        out["witness"] = vec_json(w.f);
        out["witness_ratio"] = w.objective;
        if (bound) tight = std::abs(w.objective - *bound) <= 1e-9 * *bound;
    } catch (const Error&) {
        out["witness"] = nullptr;
    }
    out["tight"] = tight;
    if (p.gamma_given) {
        auto wv = weight_vectors(p.g, S, p.params.gamma);
        json wj{{"gamma", p.params.gamma}, {"w", vec_json(wv.w)}};
        if (dec.valid_for_bounds()) {
            auto wb = kappa_lower_weighted(p.g, dec, wv.w);
            wj["lower_bound"] = wb.lower_bound;
            wj["simplified_bound"] = wb.simplified;
            wj["dstar_w"] = wb.dstar_w;
        }
        if (p.g.n() <= kExactKappaMaxN) wj["kappa_sq_exact"] = kappa_exact(p.g, S, wv.w).kappa_sq;
        out["weighted"] = wj;
    }
    return out;
}

inline json bound_json(const OracleBound& b) {
    return json{{"lambda", b.lambda},
                {"approximation", b.approximation},
                {"noise", b.noise},
                {"compatibility", b.compatibility},
                {"total", b.total}};
}

inline json cmd_oracle_bound(const json& cfg) {
    Problem p = load_problem(cfg);
    if (!p.f0) throw Error(ErrorCode::BadConfig, "oracle-bound needs a signal");
    const ActiveSet& S = require_S(p);
    if (S.empty()) throw Error(ErrorCode::EmptyS, "oracle-bound needs a non-empty active set");
    json out = header("oracle-bound", cfg);
    const Vector& f0 = *p.f0;
    const double kw = weighted_kappa_lower(p.g, S, p.params.gamma, p.cuts);
    json t = bound_json(bound_weighted(p.g, S, f0, f0, p.params, kw));
    t["kappa_w_sq_lower"] = kw;
    out["weighted_bound"] = t;

    auto dec = decompose(p.g, S, p.cuts);
    json expl = nullptr;
    std::string note;
    try {
        if (p.g.is_path()) {
            expl = bound_json(bound_path(p.g, dec, f0, f0, p.params));
            expl["form"] = "path";
        } else {
            auto rams = p.g.ramification_points();
            if (rams.size() == 1 && dec.g() == 3 && p.g.children(rams.front()).size() == 2) {
                auto bd = branching_descriptor(p.g, S, rams.front());
                auto c = classify_branch_case(bd);
                expl = bound_json(bound_branched(p.g, dec, f0, f0, p.params, c, bd.b_star()));
                expl["form"] = "branched";
                expl["case"] = branch_case_name(c);
                expl["zeta"] = zeta(c, bd.b_star());
            } else {
                expl = bound_json(bound_general(p.g, dec, f0, f0, p.params));
                expl["form"] = "general";
                expl["g"] = dec.g();
            }
        }
    } catch (const Error& e) {
        expl = nullptr;
        note = e.what();
    }
    out["explicit_bound"] = expl;
    if (!note.empty()) out["explicit_bound_note"] = note;
    out["delta_harmonic_mean"] = delta_vectors(dec).harmonic_mean;
    return out;
}

inline json cmd_irrep(const json& cfg) {
    Problem p = load_problem(cfg);
    if (!p.f0) throw Error(ErrorCode::BadConfig, "irrep needs a signal");
    ActiveSet S0 = jump_set(p.g, *p.f0);
    std::vector<int> z;
    for (int v : S0.vertices) z.push_back((*p.f0)[v - 1] > (*p.f0)[p.g.parent(v) - 1] ? 1 : -1);
    auto rep = irrep_report(p.g, S0, z);
    json out = header("irrep", cfg);
    out["active_set"] = S0.vertices;
    out["signs"] = z;
    out["lhs"] = rep.lhs;
    out["satisfied"] = rep.satisfied;
    out["analytic_verdict"] = rep.analytic ? json(*rep.analytic) : json(nullptr);
    out["violated_rules"] = rep.violated_rules;
    return out;
}

struct SimulationOutput {
    std::string csv;
    json summary;
};

inline SimulationOutput cmd_simulate(const json& cfg) {
    Problem p = load_problem(cfg);
    if (!p.f0) throw Error(ErrorCode::BadConfig, "simulate needs a signal");
    auto sim = simulate_oracle(p.g, *p.f0, p.params, p.replicates, p.seed, p.lambda);
    std::ostringstream os;
    os << "seed,mse,bound_rhs,bound_holds,pattern_recovered\n";
    std::size_t holds = 0, rec = 0;
    for (const auto& r : sim.rows) {
        os << r.seed << ',' << format_double(r.mse) << ',' << format_double(r.bound_rhs) << ','
           << (r.bound_holds ? 1 : 0) << ',' << (r.pattern_recovered ? 1 : 0) << '\n';
        holds += r.bound_holds;
        rec += r.pattern_recovered;
    }
    SimulationOutput out;
    out.csv = os.str();
    json s = header("simulate", cfg);
    const double R = static_cast<double>(sim.rows.size());
    auto [hl, hh] = wilson_interval(static_cast<double>(holds), R);
    auto [rl, rh] = wilson_interval(static_cast<double>(rec), R);
    s["replicates"] = sim.rows.size();
    s["lambda"] = sim.lambda;
    s["kappa_w_sq_lower"] = std::isfinite(sim.kappa_w_sq) ? json(sim.kappa_w_sq) : json(nullptr);
    s["bound_rhs"] = sim.bound_rhs;
    s["bound_hold_rate"] = sim.hold_rate;
    s["bound_hold_rate_ci95"] = {hl, hh};
    s["recovery_rate"] = sim.recovery_rate;
    s["recovery_rate_ci95"] = {rl, rh};
    out.summary = s;
    return out;
}

inline json cmd_gen_graph(const json& cfg) {
    if (!cfg.is_object() || !cfg.contains("graph")) throw Error(ErrorCode::BadConfig, "missing graph");
    TreeGraph g = graph_from_json(cfg["graph"]);
    json out = graph_to_json(g);
    out["schema_version"] = kSchemaVersion;
    return out;
}

inline json cmd_gen_signal(const json& cfg) {
    Problem p = load_problem(cfg);
    if (!p.f0) throw Error(ErrorCode::BadConfig, "gen-signal needs a signal");
    json out = header("gen-signal", cfg);
    out["f0"] = vec_json(*p.f0);
    out["active_set"] = jump_set(p.g, *p.f0).vertices;
    if (p.sigma_given) out["y"] = vec_json(noisy_observation(*p.f0, p.params.sigma, replicate_key(p.seed, 0)));
    return out;
}

}  // namespace tvtree::cli
