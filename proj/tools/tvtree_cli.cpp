// tvtree: command-line front end for Edge Lasso experiments on trees.
//
//   tvtree <fit|kappa|oracle-bound|irrep|simulate|gen-graph|gen-signal>
//          [--config FILE] [overrides...] [--out FILE]
//
// Flags override the matching keys of the configuration file.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "tvtree/cli.hpp"

namespace {

using tvtree::cli::json;

struct Overrides {
    std::string config_file;
    std::string graph_file;
    std::string out_file;
    std::string csv_file;
    std::string summary_file;
    int path_n = 0;
    std::string active_set;
    std::string jumps;
    std::string lambda;
    double sigma = 0, delta = 0, gamma = 0;
    int replicates = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> sets;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tvtree::Error(tvtree::ErrorCode::BadConfig, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw tvtree::Error(tvtree::ErrorCode::BadConfig, path + ": " + e.what());
    }
}

json parse_int_list(const std::string& s) {
    json a = json::array();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            a.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw tvtree::Error(tvtree::ErrorCode::BadConfig, "bad integer '" + item + "'");
        }
    }
    return a;
}

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config_file, "JSON configuration file");
    sub->add_option("--graph-file", o.graph_file, "graph JSON {\"n\": .., \"parents\": {..}}");
    sub->add_option("--path", o.path_n, "use the path graph on n vertices");
    sub->add_option("--active-set", o.active_set, "comma separated jump edges, e.g. 3,7");
    sub->add_option("--jumps", o.jumps, "signal jumps as edge:size pairs, e.g. 51:1,101:-1");
    sub->add_option("--sigma", o.sigma, "noise level");
    sub->add_option("--delta", o.delta, "confidence parameter in (0, 1)");
    sub->add_option("--gamma", o.gamma, "tuning constant > 1");
    sub->add_option("--lambda", o.lambda, "penalty level or 'rule'");
    sub->add_option("--replicates", o.replicates, "Monte Carlo replicates");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--set", o.sets, "KEY=JSON override, repeatable");
    sub->add_option("--out", o.out_file, "write JSON output here instead of stdout");
}

json merged_config(const Overrides& o, const CLI::App& sub) {
    json cfg = o.config_file.empty() ? json::object() : read_json_file(o.config_file);
    if (!cfg.is_object()) throw tvtree::Error(tvtree::ErrorCode::BadConfig, "configuration must be a JSON object");
    if (!o.graph_file.empty()) cfg["graph"] = read_json_file(o.graph_file);
    if (sub.count("--path")) cfg["graph"] = json{{"type", "path"}, {"n", o.path_n}};
    if (sub.count("--active-set")) cfg["active_set"] = parse_int_list(o.active_set);
    if (sub.count("--jumps")) {
        json j = json::object();
        std::stringstream ss(o.jumps);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto colon = item.find(':');
            if (colon == std::string::npos) throw tvtree::Error(tvtree::ErrorCode::BadConfig, "jump '" + item + "' needs edge:size");
            try {
                j[item.substr(0, colon)] = std::stod(item.substr(colon + 1));
            } catch (const std::exception&) {
                throw tvtree::Error(tvtree::ErrorCode::BadConfig, "bad jump size in '" + item + "'");
            }
        }
        cfg["signal"] = json{{"base", 0.0}, {"jumps", j}};
    }
    if (sub.count("--sigma")) cfg["sigma"] = o.sigma;
    if (sub.count("--delta")) cfg["delta"] = o.delta;
    if (sub.count("--gamma")) cfg["gamma"] = o.gamma;
    if (sub.count("--lambda")) {
        if (o.lambda == "rule") {
            cfg["lambda"] = "rule";
        } else {
            try {
                cfg["lambda"] = std::stod(o.lambda);
            } catch (const std::exception&) {
                throw tvtree::Error(tvtree::ErrorCode::BadConfig, "lambda must be a number or 'rule'");
            }
        }
    }
    if (sub.count("--replicates")) cfg["replicates"] = o.replicates;
    if (sub.count("--seed")) cfg["seed"] = o.seed;
    for (const auto& kv : o.sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw tvtree::Error(tvtree::ErrorCode::BadConfig, "--set needs KEY=JSON");
        try {
            cfg[kv.substr(0, eq)] = json::parse(kv.substr(eq + 1));
        } catch (const json::exception& e) {
            throw tvtree::Error(tvtree::ErrorCode::BadConfig, "--set " + kv + ": " + e.what());
        }
    }
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw tvtree::Error(tvtree::ErrorCode::BadConfig, "cannot write " + path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge Lasso on tree graphs"};
    app.require_subcommand(1);
    Overrides o;
    const char* names[] = {"fit", "kappa", "oracle-bound", "irrep", "simulate", "gen-graph", "gen-signal"};
    const char* help[] = {"fit the estimator", "compatibility constant and bounds", "oracle inequality bounds",
                          "irrepresentable condition", "Monte Carlo of the oracle bound", "emit a graph JSON",
                          "emit a signal (and noisy observations)"};
    std::vector<CLI::App*> subs;
    for (int i = 0; i < 7; ++i) {
        auto* s = app.add_subcommand(names[i], help[i]);
        add_common(s, o);
        subs.push_back(s);
    }
    subs[4]->add_option("--csv", o.csv_file, "per-replicate CSV output (default stdout)");
    subs[4]->add_option("--summary", o.summary_file, "summary JSON output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        CLI::App* sub = nullptr;
        for (auto* s : subs)
            if (s->parsed()) sub = s;
        const std::string name = sub->get_name();
        json cfg = merged_config(o, *sub);
        namespace c = tvtree::cli;
        if (name == "simulate") {
            auto res = c::cmd_simulate(cfg);
            write_text(o.csv_file, res.csv);
            const std::string summary = res.summary.dump(2) + "\n";
            if (!o.summary_file.empty())
                write_text(o.summary_file, summary);
            else if (!o.csv_file.empty())
                write_text(o.out_file, summary);
            return 0;
        }
        json out;
        if (name == "fit") out = c::cmd_fit(cfg);
        else if (name == "kappa") out = c::cmd_kappa(cfg);
        else if (name == "oracle-bound") out = c::cmd_oracle_bound(cfg);
        else if (name == "irrep") out = c::cmd_irrep(cfg);
        else if (name == "gen-graph") out = c::cmd_gen_graph(cfg);
        else out = c::cmd_gen_signal(cfg);
        write_text(o.out_file, out.dump(2) + "\n");
        return 0;
    } catch (const tvtree::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tvtree::cli::exit_code_for(e);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: BadConfig: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
