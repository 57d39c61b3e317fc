#pragma once

#include <map>
#include <optional>
#include <vector>

#include "arqplan/network.hpp"

namespace arqplan {

// Probability mass over residual-attempt counts carried across a link,
// conditioned on the packet having survived so far. survival is the total
// mass; 1 - survival is the drop probability accumulated upstream.
struct ResidualDistribution {
    std::map<int, double> mass;
    double survival = 0.0;
};

// Drop probability with no sharing: 1 - prod(1 - P_i^{q_i}).
double pdp_non_cooperative(const std::vector<double>& P, const ArqAllocation& q);

// Exact drop probability when each node may reuse whatever its predecessor
// left unused, learned by counting the predecessor's failed transmissions.
// Forward DP over residual mass; a node with budget 0 drops deterministically.
double pdp_sc_exact(const std::vector<double>& P, const ArqAllocation& q);

// Same quantity assembled from borrowing-pattern bit sequences (first bit 0,
// no two consecutive 1s). Structural cross-check for pdp_sc_exact.
double pdp_sc_sequence_form(const std::vector<double>& P, const ArqAllocation& q);

// Number of admissible k-bit borrowing patterns; equals Fibonacci(k+1).
long long count_borrowing_patterns(int k);

// Exact drop probability with a cluster: intra-cluster links carry the full
// accumulated residual in the packet counter (may exceed the node's own
// allotment); entry and exit links fall back to listening.
double pdp_csc_exact(const std::vector<double>& P, const ArqAllocation& q,
                     const NetworkLayout& layout);

// Dispatch on layout.strategy.
double pdp_exact(const std::vector<double>& P, const ArqAllocation& q,
                 const NetworkLayout& layout);

// Survival mass over residual counts entering the last cluster node
// (Case1/2) or leaving the cluster (Case3).
ResidualDistribution psp_at_cluster_exit(const std::vector<double>& P, const ArqAllocation& q,
                                         const NetworkLayout& layout);

// Cluster replaced by one or two virtual nodes: node v pools the first
// n_cy - 1 cluster allotments (all n_cy for Case3) and node v+1 keeps the
// last cluster node's own allotment (Case1/2 only).
struct VirtualNetwork {
    int n_virtual = 0;
    int v_index = 0; // 0-based position of node v in the virtual chain
    int q_v = 0;
    std::optional<int> q_v_plus_1;
    ArqAllocation q_virtual; // length n_virtual
};

VirtualNetwork collapse_cluster(const ArqAllocation& q, const NetworkLayout& layout);

// Moves every intra-cluster allotment onto the first cluster node, keeping
// the last cluster node's own share for Case1/2. Total unchanged.
ArqAllocation canonicalize_cluster(const ArqAllocation& q, const NetworkLayout& layout);

// Virtual-chain length for the layout (physical n_hops for non-CSC).
int virtual_length(const NetworkLayout& layout);

// Inverse of collapse for canonical allocations: virtual vector back to the
// physical chain with zeros on the cluster interior.
ArqAllocation expand_virtual(const NetworkLayout& layout, const ArqAllocation& q_virtual);

// Evaluates a virtual allocation directly against the physical outage
// vector. cap bounds the pooled segment's attempt support (use the budget
// q_sum). Equals pdp_csc_exact(expand_virtual(...)) for canonical inputs.
double pdp_virtual(const std::vector<double>& P, const NetworkLayout& layout,
                   const ArqAllocation& q_virtual, int cap);

// Drop probability of the chain truncated after the first `j` virtual nodes,
// treating node j-1 as the destination. j = virtual_length gives pdp_virtual.
// This is the stage objective used by the fold algorithms.
double pdp_virtual_prefix(const std::vector<double>& P, const NetworkLayout& layout,
                          const ArqAllocation& q_virtual_prefix, int j, int cap);

} // namespace arqplan
