#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "arqplan/channel.hpp"
#include "arqplan/network.hpp"

namespace arqplan {

// All times in microseconds. t_c is the counter encrypt/decrypt cost paid
// once per counter-updating node on the forward path. deadline empty means
// q_sum * (tau_p + tau_d).
struct DelayModel {
    double tau_p = 0.5;
    double tau_d = 0.5;
    double tau_nack = 0.0;
    double t_c = 0.0;
    std::optional<double> deadline;
    // Default charges tau_nack on every attempt, matching the worst-case
    // deadline bound n*(tau_p+tau_d+tau_nack); set to true to charge it only
    // on failed attempts.
    bool nack_on_failure_only = false;

    void validate() const;
    double effective_deadline(int q_sum) const;
};

struct SimulationReport {
    double pdp_hat = 0.0;
    double avg_delay = 0.0; // delivered packets only
    double w_drop = 0.0;
    double w_deadline = 0.0;
    double eta = 1.0; // (w_drop + w_deadline) / w_drop
    double pdv = 0.0; // w_drop + w_deadline
    std::map<int, long long> delay_histogram; // bin index -> delivered count
    double histogram_bin_width = 0.1;
    long long packets = 0;
    long long delivered = 0;
    long long total_attempts = 0;
    long long counter_updates = 0;
    std::uint64_t seed = 0;
    double deadline = 0.0;
};

// Per-packet Monte Carlo under the exact residual rules of the evaluators.
// Outcomes are keyed to (seed, packet index), so reports are identical for
// any thread count. When links are present, per-attempt failures are drawn
// through the fading channel instead of the fixed outage vector.
SimulationReport simulate(const NetworkLayout& layout, const ArqAllocation& q,
                          const std::vector<double>& P, const DelayModel& delay,
                          long long n_packets, std::uint64_t seed);

SimulationReport simulate_channel(const NetworkLayout& layout, const ArqAllocation& q,
                                  const std::vector<LinkSpec>& links, const DelayModel& delay,
                                  long long n_packets, std::uint64_t seed);

struct DelayProfileRow {
    double delay_low = 0.0; // bin lower edge, microseconds
    double mass = 0.0;      // fraction of delivered packets
    long long count = 0;
};

struct DelayProfile {
    std::vector<DelayProfileRow> rows; // masses sum to 1 over delivered packets
    double p_nd = 0.0;                 // fraction of packets not dropped
    bool empty = false;                // nothing delivered
};

DelayProfile delay_profile(const SimulationReport& report);

} // namespace arqplan
