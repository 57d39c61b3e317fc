#include "arqplan/network.hpp"

#include <numeric>

namespace arqplan {

NetworkLayout NetworkLayout::non_coop(int n_hops) {
    NetworkLayout l;
    l.n_hops = n_hops;
    l.strategy = Strategy::NonCoop;
    l.validate();
    return l;
}

NetworkLayout NetworkLayout::sc(int n_hops) {
    NetworkLayout l;
    l.n_hops = n_hops;
    l.strategy = Strategy::SC;
    l.validate();
    return l;
}

NetworkLayout NetworkLayout::csc(int n_su, int n_cy, int n_sw) {
    NetworkLayout l;
    l.n_hops = n_su + n_cy + n_sw;
    l.strategy = Strategy::CSC;
    ClusterCase kase;
    if (n_su == 0 && n_sw > 0) kase = ClusterCase::Case1;
    else if (n_sw == 0) kase = ClusterCase::Case3;
    else kase = ClusterCase::Case2;
    l.cluster = ClusterSpec{kase, n_su, n_cy, n_sw};
    l.validate();
    return l;
}

bool NetworkLayout::in_cluster(int hop) const {
    if (strategy != Strategy::CSC || !cluster) return false;
    return hop >= cluster->n_su && hop < cluster->n_su + cluster->n_cy;
}

bool NetworkLayout::counter_link(int hop) const {
    return in_cluster(hop) && in_cluster(hop + 1);
}

void NetworkLayout::validate() const {
    if (n_hops < 1) throw ValidationError("layout.n_hops: must be >= 1");
    if (strategy == Strategy::CSC) {
        if (!cluster) throw ValidationError("layout.cluster: required for the cluster strategy");
        const auto& c = *cluster;
        if (c.n_cy < 2) throw ValidationError("layout.cluster.n_cy: cluster needs >= 2 hops");
        if (c.n_su < 0 || c.n_sw < 0)
            throw ValidationError("layout.cluster: segment sizes must be >= 0");
        if (c.n_su + c.n_cy + c.n_sw != n_hops)
            throw ValidationError("layout.cluster: segment sizes must sum to n_hops");
        switch (c.kase) {
        case ClusterCase::Case1:
            if (c.n_su != 0)
                throw ValidationError("layout.cluster: case 1 places the cluster first (n_su = 0)");
            break;
        case ClusterCase::Case2:
            if (c.n_su < 1 || c.n_sw < 1)
                throw ValidationError(
                    "layout.cluster: case 2 needs hops on both sides of the cluster");
            break;
        case ClusterCase::Case3:
            if (c.n_sw != 0)
                throw ValidationError("layout.cluster: case 3 places the cluster last (n_sw = 0)");
            break;
        }
    } else if (cluster) {
        throw ValidationError("layout.cluster: only valid with the cluster strategy");
    }
}

int sum_allocation(const ArqAllocation& q) { return std::accumulate(q.begin(), q.end(), 0); }

} // namespace arqplan
