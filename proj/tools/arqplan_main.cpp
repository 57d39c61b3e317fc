#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "arqplan/optimizer.hpp"
#include "arqplan/pdp.hpp"
#include "arqplan/scenario.hpp"
#include "arqplan/simulator.hpp"

namespace {

using nlohmann::json;
using namespace arqplan;

constexpr const char* kVersion = "1.0.0";

struct CommonOpts {
    std::string scenario_path;
    std::string allocation_csv;
    std::string method;
    int folds = -1; // -1 = use the scenario's value
    std::string out_path;
    std::string format; // empty = per-command default
    long long seed = -1; // -1 = use the scenario's value
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--scenario", o.scenario_path, "scenario JSON file")->required();
    sub->add_option("--allocation", o.allocation_csv, "per-hop ARQ counts, comma separated");
    sub->add_option("--method", o.method, "EXHAUSTIVE | ONE_FOLD | MULTI_FOLD | GREEDY");
    sub->add_option("--folds", o.folds, "fold stages for MULTI_FOLD (0 = maximum)");
    sub->add_option("--out", o.out_path, "write the report here instead of stdout");
    sub->add_option("--format", o.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", o.seed, "simulation seed override");
}

std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& v, char sep = ' ') {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

ArqAllocation parse_allocation(const std::string& text) {
    ArqAllocation out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            size_t used = 0;
            int v = std::stoi(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError("--allocation: '" + tok + "' is not an integer");
        }
    }
    if (out.empty()) throw ValidationError("--allocation: empty list");
    return out;
}

std::string timestamp_utc() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json envelope(const Scenario& s, const std::string& command, json results) {
    json doc;
    doc["tool"] = "arqplan";
    doc["version"] = kVersion;
    doc["timestamp"] = timestamp_utc();
    doc["command"] = command;
    doc["scenario"] = scenario_to_json(s);
    doc["results"] = std::move(results);
    return doc;
}

void write_text(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw ValidationError("cannot write to '" + out_path + "'");
    f << text;
}

// Apply command-line overrides on top of the scenario file.
Scenario load(const CommonOpts& o) {
    Scenario s = load_scenario(o.scenario_path);
    if (!o.allocation_csv.empty()) {
        s.allocation = parse_allocation(o.allocation_csv);
        s.validate();
    }
    if (!o.method.empty()) s.opt_method = parse_method(o.method);
    if (o.folds >= 0) s.opt_folds = o.folds;
    if (o.seed >= 0) s.sim_seed = static_cast<std::uint64_t>(o.seed);
    return s;
}

std::string pick_format(const CommonOpts& o, const char* dflt) {
    return o.format.empty() ? dflt : o.format;
}

ArqAllocation required_allocation(const Scenario& s) {
    if (!s.allocation)
        throw ValidationError("no allocation: pass --allocation or set it in the scenario");
    return *s.allocation;
}

// ---- commands --------------------------------------------------------------

int cmd_outage(const CommonOpts& o) {
    Scenario s = load(o);
    std::vector<double> p = s.resolve_outage();
    if (pick_format(o, "json") == "csv") {
        std::string text = "hop,los_c,outage\n";
        for (size_t i = 0; i < p.size(); ++i) {
            double c = i < s.los.size() ? s.los[i] : 0.0;
            text += std::to_string(i + 1) + "," + fmt12(c) + "," + fmt12(p[i]) + "\n";
        }
        write_text(text, o.out_path);
    } else {
        json rows = json::array();
        for (size_t i = 0; i < p.size(); ++i) {
            json row;
            row["hop"] = i + 1;
            if (i < s.los.size()) row["los_c"] = s.los[i];
            row["outage"] = p[i];
            rows.push_back(row);
        }
        write_text(envelope(s, "outage", json{{"per_hop", rows}}).dump(2) + "\n", o.out_path);
    }
    return 0;
}

int cmd_pdp(const CommonOpts& o) {
    Scenario s = load(o);
    ArqAllocation q = required_allocation(s);
    std::vector<double> p = s.resolve_outage();
    double pdp = pdp_exact(p, q, s.layout);
    if (pick_format(o, "json") == "csv") {
        std::string text = "metric,value\n";
        text += "pdp," + fmt12(pdp) + "\n";
        text += "q_sum," + std::to_string(sum_allocation(q)) + "\n";
        write_text(text, o.out_path);
    } else {
        json res;
        res["allocation"] = q;
        res["pdp"] = pdp;
        write_text(envelope(s, "pdp", res).dump(2) + "\n", o.out_path);
    }
    return 0;
}

json report_to_json(int q_sum, SearchMethod m, const OptimizationReport& rep) {
    json r;
    r["q_sum"] = q_sum;
    r["method"] = method_name(m);
    r["best_allocation"] = rep.best_allocation;
    r["best_pdp"] = rep.best_pdp;
    r["list_size"] = rep.list_size;
    r["evaluations"] = rep.evaluations;
    return r;
}

int cmd_optimize(const CommonOpts& o) {
    Scenario s = load(o);
    OptimizationRequest req;
    req.layout = s.layout;
    req.outage = s.resolve_outage();
    req.q_sum = s.q_sum;
    req.method = s.opt_method;
    req.folds = s.opt_folds;
    OptimizationReport rep = optimize(req);
    if (pick_format(o, "json") == "csv") {
        std::string text = "q_sum,method,pdp,list_size,evaluations,allocation\n";
        text += std::to_string(s.q_sum) + "," + method_name(s.opt_method) + "," +
                fmt12(rep.best_pdp) + "," + std::to_string(rep.list_size) + "," +
                std::to_string(rep.evaluations) + "," + join_ints(rep.best_allocation) + "\n";
        write_text(text, o.out_path);
    } else {
        write_text(envelope(s, "optimize", report_to_json(s.q_sum, s.opt_method, rep)).dump(2) +
                       "\n",
                   o.out_path);
    }
    return 0;
}

std::string histogram_csv(const DelayProfile& prof) {
    std::string text = "delay_low,count,mass\n";
    for (const auto& row : prof.rows)
        text += fmt12(row.delay_low) + "," + std::to_string(row.count) + "," + fmt12(row.mass) +
                "\n";
    return text;
}

int cmd_simulate(const CommonOpts& o) {
    Scenario s = load(o);
    ArqAllocation q = required_allocation(s);
    SimulationReport rep;
    if (s.outage_override)
        rep = simulate(s.layout, q, *s.outage_override, s.delay, s.sim_packets, s.sim_seed);
    else
        rep = simulate_channel(s.layout, q, s.links(), s.delay, s.sim_packets, s.sim_seed);
    DelayProfile prof = delay_profile(rep);

    if (pick_format(o, "json") == "csv") {
        std::string text = "metric,value\n";
        text += "pdp_hat," + fmt12(rep.pdp_hat) + "\n";
        text += "avg_delay," + fmt12(rep.avg_delay) + "\n";
        text += "w_drop," + fmt12(rep.w_drop) + "\n";
        text += "w_deadline," + fmt12(rep.w_deadline) + "\n";
        text += "eta," + fmt12(rep.eta) + "\n";
        text += "pdv," + fmt12(rep.pdv) + "\n";
        text += "p_nd," + fmt12(prof.p_nd) + "\n";
        text += "packets," + std::to_string(rep.packets) + "\n";
        text += "delivered," + std::to_string(rep.delivered) + "\n";
        text += "total_attempts," + std::to_string(rep.total_attempts) + "\n";
        text += "counter_updates," + std::to_string(rep.counter_updates) + "\n";
        text += "deadline," + fmt12(rep.deadline) + "\n";
        text += "seed," + std::to_string(rep.seed) + "\n";
        if (o.out_path.empty()) {
            text += "\n" + histogram_csv(prof);
            write_text(text, o.out_path);
        } else {
            write_text(text, o.out_path);
            write_text(histogram_csv(prof), o.out_path + ".hist.csv");
        }
    } else {
        json res;
        res["pdp_hat"] = rep.pdp_hat;
        res["avg_delay"] = rep.avg_delay;
        res["w_drop"] = rep.w_drop;
        res["w_deadline"] = rep.w_deadline;
        res["eta"] = rep.eta;
        res["pdv"] = rep.pdv;
        res["packets"] = rep.packets;
        res["delivered"] = rep.delivered;
        res["total_attempts"] = rep.total_attempts;
        res["counter_updates"] = rep.counter_updates;
        res["deadline"] = rep.deadline;
        res["seed"] = rep.seed;
        json rows = json::array();
        for (const auto& row : prof.rows)
            rows.push_back({{"delay_low", row.delay_low}, {"count", row.count}, {"mass", row.mass}});
        res["delay_profile"] = {{"rows", rows}, {"p_nd", prof.p_nd}, {"empty", prof.empty}};
        write_text(envelope(s, "simulate", res).dump(2) + "\n", o.out_path);
        if (!o.out_path.empty())
            write_text(histogram_csv(prof), o.out_path + ".hist.csv");
    }
    return 0;
}

int cmd_sweep(const CommonOpts& o) {
    Scenario s = load(o);
    if (!s.sweep_range)
        throw ValidationError("sweep: scenario has no sweep range (set sweep.q_min / sweep.q_max)");
    auto [q_lo, q_hi] = *s.sweep_range;
    if (q_lo > q_hi) throw ValidationError("sweep: empty q_sum range");

    std::vector<SearchMethod> methods;
    if (!o.method.empty()) {
        methods.push_back(parse_method(o.method));
    } else if (s.layout.strategy == Strategy::NonCoop) {
        methods = {SearchMethod::Exhaustive, SearchMethod::OneFold};
    } else {
        methods = {SearchMethod::Exhaustive, SearchMethod::OneFold, SearchMethod::MultiFold,
                   SearchMethod::Greedy};
    }

    std::vector<double> outage = s.resolve_outage();
    json rows = json::array();
    std::string text = "q_sum,method,pdp,list_size\n";
    for (int qs = q_lo; qs <= q_hi; ++qs) {
        for (SearchMethod m : methods) {
            OptimizationRequest req;
            req.layout = s.layout;
            req.outage = outage;
            req.q_sum = qs;
            req.method = m;
            req.folds = s.opt_folds;
            OptimizationReport rep = optimize(req);
            text += std::to_string(qs) + "," + method_name(m) + "," + fmt12(rep.best_pdp) + "," +
                    std::to_string(rep.list_size) + "\n";
            rows.push_back(report_to_json(qs, m, rep));
        }
    }
    if (pick_format(o, "csv") == "csv")
        write_text(text, o.out_path);
    else
        write_text(envelope(s, "sweep", json{{"rows", rows}}).dump(2) + "\n", o.out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ARQ retransmission budget planner"};
    app.require_subcommand(1);

    CommonOpts o;
    CLI::App* sub_outage = app.add_subcommand("outage", "per-hop decoding error probabilities");
    CLI::App* sub_pdp = app.add_subcommand("pdp", "exact packet drop probability");
    CLI::App* sub_optimize = app.add_subcommand("optimize", "best ARQ allocation for q_sum");
    CLI::App* sub_simulate = app.add_subcommand("simulate", "Monte-Carlo packet simulation");
    CLI::App* sub_sweep = app.add_subcommand("sweep", "optimize across a q_sum range");
    for (CLI::App* sub : {sub_outage, sub_pdp, sub_optimize, sub_simulate, sub_sweep})
        add_common(sub, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // bad usage is a validation failure
    }

    try {
        if (sub_outage->parsed()) return cmd_outage(o);
        if (sub_pdp->parsed()) return cmd_pdp(o);
        if (sub_optimize->parsed()) return cmd_optimize(o);
        if (sub_simulate->parsed()) return cmd_simulate(o);
        if (sub_sweep->parsed()) return cmd_sweep(o);
        std::cerr << "error: no command\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
