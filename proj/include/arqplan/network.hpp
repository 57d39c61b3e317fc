#pragma once

#include <optional>
#include <vector>

#include "arqplan/errors.hpp"

namespace arqplan {

enum class Strategy { NonCoop, SC, CSC };

// Cluster position within the chain. Case1: cluster leads, Case2: cluster is
// interior, Case3: cluster ends the chain.
enum class ClusterCase { Case1 = 1, Case2 = 2, Case3 = 3 };

struct ClusterSpec {
    ClusterCase kase;
    int n_su; // hops before the cluster
    int n_cy; // cluster hops (>= 2)
    int n_sw; // hops after the cluster
};

// Per-hop retransmission allotment. Bound to a budget q_sum by callers.
using ArqAllocation = std::vector<int>;

struct NetworkLayout {
    int n_hops = 0;
    Strategy strategy = Strategy::SC;
    std::optional<ClusterSpec> cluster;

    static NetworkLayout non_coop(int n_hops);
    static NetworkLayout sc(int n_hops);
    static NetworkLayout csc(int n_su, int n_cy, int n_sw);

    // hop indices are 0-based throughout
    bool in_cluster(int hop) const;
    // true when the residual leaving `hop` rides the packet counter into
    // hop+1, i.e. both endpoints sit inside the cluster; all other links
    // convey residuals by listening only
    bool counter_link(int hop) const;

    void validate() const; // throws ValidationError
};

int sum_allocation(const ArqAllocation& q);

} // namespace arqplan
