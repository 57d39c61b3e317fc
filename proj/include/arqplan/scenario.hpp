#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arqplan/channel.hpp"
#include "arqplan/network.hpp"
#include "arqplan/optimizer.hpp"
#include "arqplan/simulator.hpp"

namespace arqplan {

// One experiment configuration, loaded from a versioned JSON document.
// Validation failures carry the offending field path in the message.
struct Scenario {
    int schema = 1;
    int hops = 0;
    std::vector<double> los;
    double snr_db = 10.0;
    double rate = 1.0;
    std::optional<int> blocklength;            // empty = "asymptotic"
    std::optional<std::vector<double>> outage_override;
    int q_sum = 0;
    NetworkLayout layout;
    std::optional<ArqAllocation> allocation;   // for pdp/simulate without --allocation
    DelayModel delay;
    long long sim_packets = 1000000;
    std::uint64_t sim_seed = 1;
    SearchMethod opt_method = SearchMethod::Exhaustive;
    int opt_folds = 0;
    std::optional<std::pair<int, int>> sweep_range; // inclusive q_sum bounds

    nlohmann::json raw; // parsed document, echoed into reports

    std::vector<LinkSpec> links() const;
    // Per-hop outage: the override verbatim when present, else channel math.
    std::vector<double> resolve_outage() const;
    void validate() const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& s);

std::string method_name(SearchMethod m);
SearchMethod parse_method(const std::string& name); // throws ValidationError

} // namespace arqplan
