#include "arqplan/scenario.hpp"

#include <fstream>

namespace arqplan {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError("scenario field '" + path + "': " + what);
}

const json* find(const json& j, const std::string& key) {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

long long as_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<long long>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected a boolean");
    return j.get<bool>();
}

std::vector<double> as_number_list(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

ArqAllocation as_int_list(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of integers");
    ArqAllocation out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(static_cast<int>(as_integer(j[i], path + "[" + std::to_string(i) + "]")));
    return out;
}

Strategy parse_strategy(const std::string& name) {
    if (name == "NON_COOP") return Strategy::NonCoop;
    if (name == "SC") return Strategy::SC;
    if (name == "CSC") return Strategy::CSC;
    throw ValidationError("scenario field 'strategy': unknown value '" + name +
                          "' (use NON_COOP, SC, or CSC)");
}

std::string strategy_name(Strategy s) {
    switch (s) {
    case Strategy::NonCoop: return "NON_COOP";
    case Strategy::SC: return "SC";
    case Strategy::CSC: return "CSC";
    }
    return "SC";
}

} // namespace

std::vector<LinkSpec> Scenario::links() const {
    std::vector<LinkSpec> out;
    out.reserve(los.size());
    for (double c : los) {
        LinkSpec l;
        l.los_c = c;
        l.snr_db = snr_db;
        l.rate = rate;
        l.blocklength = blocklength;
        out.push_back(l);
    }
    return out;
}

std::vector<double> Scenario::resolve_outage() const {
    if (outage_override) return *outage_override;
    return outage_profile(links());
}

void Scenario::validate() const {
    if (schema != 1) fail("schema", "unsupported version " + std::to_string(schema));
    if (hops < 1) fail("hops", "need at least one hop");
    layout.validate();
    if (layout.n_hops != hops) fail("hops", "does not match the layout");
    if (outage_override) {
        if (static_cast<int>(outage_override->size()) != hops)
            fail("outage_override", "length must equal hops");
        for (double p : *outage_override)
            if (!(p >= 0.0 && p <= 1.0)) fail("outage_override", "entries must lie in [0,1]");
    } else {
        if (static_cast<int>(los.size()) != hops) fail("los", "length must equal hops");
    }
    if (!los.empty() && static_cast<int>(los.size()) != hops)
        fail("los", "length must equal hops");
    for (const auto& l : links()) l.validate();
    if (q_sum < 1) fail("q_sum", "must be positive");
    if (allocation) {
        if (static_cast<int>(allocation->size()) != hops)
            fail("allocation", "length must equal hops");
        for (int a : *allocation)
            if (a < 0) fail("allocation", "entries must be >= 0");
        if (sum_allocation(*allocation) != q_sum)
            fail("allocation", "entries must sum to q_sum");
    }
    delay.validate();
    if (sim_packets < 1) fail("sim.packets", "need at least one packet");
    if (opt_folds < 0) fail("optimize.folds", "must be >= 0");
    if (sweep_range && sweep_range->first > sweep_range->second)
        fail("sweep", "q_min must not exceed q_max");
}

Scenario parse_scenario(const json& doc) {
    if (!doc.is_object()) throw ValidationError("scenario: document must be a JSON object");
    Scenario s;
    s.raw = doc;

    if (const json* v = find(doc, "schema")) s.schema = static_cast<int>(as_integer(*v, "schema"));
    if (const json* v = find(doc, "hops"))
        s.hops = static_cast<int>(as_integer(*v, "hops"));
    else
        fail("hops", "missing");
    if (const json* v = find(doc, "los")) s.los = as_number_list(*v, "los");
    if (const json* v = find(doc, "snr_db")) s.snr_db = as_number(*v, "snr_db");
    if (const json* v = find(doc, "rate")) s.rate = as_number(*v, "rate");
    if (const json* v = find(doc, "blocklength")) {
        if (v->is_string()) {
            if (v->get<std::string>() != "asymptotic")
                fail("blocklength", "expected an integer or \"asymptotic\"");
        } else {
            s.blocklength = static_cast<int>(as_integer(*v, "blocklength"));
        }
    }
    if (const json* v = find(doc, "outage_override"))
        s.outage_override = as_number_list(*v, "outage_override");
    if (const json* v = find(doc, "q_sum"))
        s.q_sum = static_cast<int>(as_integer(*v, "q_sum"));
    else
        fail("q_sum", "missing");

    Strategy strat = Strategy::SC;
    if (const json* v = find(doc, "strategy")) strat = parse_strategy(as_string(*v, "strategy"));
    if (strat == Strategy::CSC) {
        const json* cl = find(doc, "cluster");
        if (!cl) fail("cluster", "required for the CSC strategy");
        const json* su = find(*cl, "n_su");
        const json* cy = find(*cl, "n_cy");
        const json* sw = find(*cl, "n_sw");
        if (!su || !cy || !sw) fail("cluster", "needs n_su, n_cy and n_sw");
        int n_su = static_cast<int>(as_integer(*su, "cluster.n_su"));
        int n_cy = static_cast<int>(as_integer(*cy, "cluster.n_cy"));
        int n_sw = static_cast<int>(as_integer(*sw, "cluster.n_sw"));
        s.layout = NetworkLayout::csc(n_su, n_cy, n_sw);
        if (const json* v = find(*cl, "case")) {
            int want = static_cast<int>(as_integer(*v, "cluster.case"));
            if (want != static_cast<int>(s.layout.cluster->kase))
                fail("cluster.case", "inconsistent with n_su/n_sw (derived case " +
                                         std::to_string(static_cast<int>(s.layout.cluster->kase)) +
                                         ")");
        }
    } else if (strat == Strategy::SC) {
        s.layout = NetworkLayout::sc(s.hops);
    } else {
        s.layout = NetworkLayout::non_coop(s.hops);
    }

    if (const json* v = find(doc, "allocation")) s.allocation = as_int_list(*v, "allocation");

    if (const json* v = find(doc, "delay")) {
        if (!v->is_object()) fail("delay", "expected an object");
        if (const json* f = find(*v, "tau_p")) s.delay.tau_p = as_number(*f, "delay.tau_p");
        if (const json* f = find(*v, "tau_d")) s.delay.tau_d = as_number(*f, "delay.tau_d");
        if (const json* f = find(*v, "tau_nack")) s.delay.tau_nack = as_number(*f, "delay.tau_nack");
        if (const json* f = find(*v, "t_c")) s.delay.t_c = as_number(*f, "delay.t_c");
        if (const json* f = find(*v, "deadline")) s.delay.deadline = as_number(*f, "delay.deadline");
        if (const json* f = find(*v, "nack_on_failure_only"))
            s.delay.nack_on_failure_only = as_bool(*f, "delay.nack_on_failure_only");
    }

    if (const json* v = find(doc, "sim")) {
        if (!v->is_object()) fail("sim", "expected an object");
        if (const json* f = find(*v, "packets")) s.sim_packets = as_integer(*f, "sim.packets");
        if (const json* f = find(*v, "seed")) {
            long long sd = as_integer(*f, "sim.seed");
            if (sd < 0) fail("sim.seed", "must be >= 0");
            s.sim_seed = static_cast<std::uint64_t>(sd);
        }
    }

    if (const json* v = find(doc, "optimize")) {
        if (!v->is_object()) fail("optimize", "expected an object");
        if (const json* f = find(*v, "method"))
            s.opt_method = parse_method(as_string(*f, "optimize.method"));
        if (const json* f = find(*v, "folds"))
            s.opt_folds = static_cast<int>(as_integer(*f, "optimize.folds"));
    }

    if (const json* v = find(doc, "sweep")) {
        if (!v->is_object()) fail("sweep", "expected an object");
        const json* lo = find(*v, "q_min");
        const json* hi = find(*v, "q_max");
        if (!lo || !hi) fail("sweep", "needs q_min and q_max");
        s.sweep_range = {static_cast<int>(as_integer(*lo, "sweep.q_min")),
                         static_cast<int>(as_integer(*hi, "sweep.q_max"))};
    }

    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario: cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("scenario: invalid JSON in '" + path + "': " + e.what());
    }
    return parse_scenario(doc);
}

json scenario_to_json(const Scenario& s) {
    json doc;
    doc["schema"] = s.schema;
    doc["hops"] = s.hops;
    if (!s.los.empty()) doc["los"] = s.los;
    doc["snr_db"] = s.snr_db;
    doc["rate"] = s.rate;
    if (s.blocklength)
        doc["blocklength"] = *s.blocklength;
    else
        doc["blocklength"] = "asymptotic";
    if (s.outage_override) doc["outage_override"] = *s.outage_override;
    doc["q_sum"] = s.q_sum;
    doc["strategy"] = strategy_name(s.layout.strategy);
    if (s.layout.strategy == Strategy::CSC && s.layout.cluster) {
        doc["cluster"] = {{"case", static_cast<int>(s.layout.cluster->kase)},
                          {"n_su", s.layout.cluster->n_su},
                          {"n_cy", s.layout.cluster->n_cy},
                          {"n_sw", s.layout.cluster->n_sw}};
    }
    if (s.allocation) doc["allocation"] = *s.allocation;
    json d;
    d["tau_p"] = s.delay.tau_p;
    d["tau_d"] = s.delay.tau_d;
    d["tau_nack"] = s.delay.tau_nack;
    d["t_c"] = s.delay.t_c;
    if (s.delay.deadline) d["deadline"] = *s.delay.deadline;
    if (s.delay.nack_on_failure_only) d["nack_on_failure_only"] = true;
    doc["delay"] = d;
    doc["sim"] = {{"packets", s.sim_packets}, {"seed", s.sim_seed}};
    doc["optimize"] = {{"method", method_name(s.opt_method)}, {"folds", s.opt_folds}};
    if (s.sweep_range)
        doc["sweep"] = {{"q_min", s.sweep_range->first}, {"q_max", s.sweep_range->second}};
    return doc;
}

std::string method_name(SearchMethod m) {
    switch (m) {
    case SearchMethod::Exhaustive: return "EXHAUSTIVE";
    case SearchMethod::OneFold: return "ONE_FOLD";
    case SearchMethod::MultiFold: return "MULTI_FOLD";
    case SearchMethod::Greedy: return "GREEDY";
    }
    return "EXHAUSTIVE";
}

SearchMethod parse_method(const std::string& name) {
    if (name == "EXHAUSTIVE") return SearchMethod::Exhaustive;
    if (name == "ONE_FOLD") return SearchMethod::OneFold;
    if (name == "MULTI_FOLD") return SearchMethod::MultiFold;
    if (name == "GREEDY") return SearchMethod::Greedy;
    throw ValidationError("unknown method '" + name +
                          "' (use EXHAUSTIVE, ONE_FOLD, MULTI_FOLD, or GREEDY)");
}

} // namespace arqplan
