#include "arqplan/pdp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace arqplan {

namespace {

void check_lengths(const std::vector<double>& P, const ArqAllocation& q) {
    if (P.size() != q.size())
        throw ValidationError("pdp: outage vector and allocation differ in length");
    for (double p : P)
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("pdp: outage entries must lie in [0,1]");
    for (int qi : q)
        if (qi < 0) throw ValidationError("pdp: allocation entries must be >= 0");
}

// How the final processed hop hands off its residual.
enum class TailMode {
    Terminal,        // destination reached: residual is discarded
    Open,            // chain continues elsewhere: residual follows the link rule
    OpenForceCounter // as Open, but the last hop keeps counter semantics
                     // (unused budget leaving a chain-ending cluster)
};

// Forward DP over the residual carried between hops. dist[r] is the
// probability the packet survived so far and the next hop starts with
// residual r; the return value is the drop mass accumulated over the
// processed hops.
double residual_dp(const std::vector<double>& P, const ArqAllocation& q,
                   const NetworkLayout& layout, int n_hops, std::vector<double>& dist,
                   TailMode tail = TailMode::Terminal) {
    double drop = 0.0;
    for (int i = 0; i < n_hops; ++i) {
        double p = P[i];
        bool last = i == n_hops - 1;
        bool counter = layout.counter_link(i) || (last && tail == TailMode::OpenForceCounter);
        std::vector<double> nxt(q[i] + dist.size() + 1, 0.0);
        for (int r = 0; r < static_cast<int>(dist.size()); ++r) {
            double m = dist[r];
            if (m == 0.0) continue;
            int b = q[i] + r;
            if (b == 0) {
                drop += m; // no attempt possible at this hop
                continue;
            }
            double pw = 1.0;
            for (int a = 1; a <= b; ++a) {
                double ps = pw * (1.0 - p);
                pw *= p;
                int rn;
                if (last && tail == TailMode::Terminal) rn = 0;
                else if (counter) rn = q[i] + r - a;
                else rn = std::max(q[i] - a, 0);
                nxt[rn] += m * ps;
            }
            drop += m * pw; // pw = p^b, all attempts failed
        }
        dist.swap(nxt);
    }
    return drop;
}

double run_chain(const std::vector<double>& P, const ArqAllocation& q,
                 const NetworkLayout& layout) {
    check_lengths(P, q);
    std::vector<double> dist(1, 1.0);
    return residual_dp(P, q, layout, static_cast<int>(P.size()), dist);
}

// Enumerates admissible borrowing patterns: first bit 0, no consecutive 1s.
// A set bit at position m means node m+1 drew past its own allotment, which
// leaves nothing for node m+2 to listen to.
void for_each_pattern(int k, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> bits(k, 0);
    std::function<void(int)> rec = [&](int m) {
        if (m == k) {
            fn(bits);
            return;
        }
        bits[m] = 0;
        rec(m + 1);
        if (m > 0 && bits[m - 1] == 0) {
            bits[m] = 1;
            rec(m + 1);
            bits[m] = 0;
        }
    };
    rec(0);
}

// Probability the packet is dropped exactly at hop k under one borrowing
// pattern. r tracks the listening residual available to the current node.
double sequence_term(const std::vector<double>& P, const ArqAllocation& q, int k,
                     const std::vector<int>& bits) {
    std::function<double(int, int)> rec = [&](int m, int r) -> double {
        double p = P[m - 1];
        int own = q[m - 1];
        if (m == k) {
            // drop at the final node of this pattern; the bit fixes whether
            // residual budget was in play
            if (bits[m - 1] == 0) return r == 0 ? std::pow(p, own) : 0.0;
            return r >= 1 ? std::pow(p, own + r) : 0.0;
        }
        double acc = 0.0;
        if (bits[m - 1] == 0) {
            double pw = 1.0;
            for (int a = 1; a <= own; ++a) {
                acc += pw * (1.0 - p) * rec(m + 1, own - a);
                pw *= p;
            }
        } else if (r >= 1) {
            double pw = std::pow(p, own);
            for (int a = own + 1; a <= own + r; ++a) {
                acc += pw * (1.0 - p) * rec(m + 1, 0);
                pw *= p;
            }
        }
        return acc;
    };
    return rec(1, 0);
}

int cluster_start(const NetworkLayout& layout) { return layout.cluster->n_su; }

// Pooled-segment width of node v.
int pooled_len(const NetworkLayout& layout) {
    const auto& c = *layout.cluster;
    return c.kase == ClusterCase::Case3 ? c.n_cy : c.n_cy - 1;
}

// kernel[t] = probability of crossing the pooled hops with exactly t
// attempts in total, truncated at cap. Convolution of one truncated
// geometric pmf per hop.
std::vector<double> segment_kernel(const std::vector<double>& P, int first, int len, int cap) {
    std::vector<double> k(cap + 1, 0.0);
    if (cap >= 0) k[0] = 1.0;
    for (int h = 0; h < len; ++h) {
        double p = P[first + h];
        std::vector<double> nk(cap + 1, 0.0);
        for (int t = 0; t <= cap; ++t) {
            if (k[t] == 0.0) continue;
            double pw = 1.0;
            for (int a = 1; t + a <= cap; ++a) {
                nk[t + a] += k[t] * pw * (1.0 - p);
                pw *= p;
            }
        }
        k.swap(nk);
    }
    return k;
}

} // namespace

double pdp_non_cooperative(const std::vector<double>& P, const ArqAllocation& q) {
    check_lengths(P, q);
    double surv = 1.0;
    for (size_t i = 0; i < P.size(); ++i)
        surv *= 1.0 - std::pow(P[i], q[i]); // q_i = 0 gives P^0 = 1: certain drop
    return 1.0 - surv;
}

double pdp_sc_exact(const std::vector<double>& P, const ArqAllocation& q) {
    return run_chain(P, q, NetworkLayout::sc(static_cast<int>(P.size())));
}

double pdp_sc_sequence_form(const std::vector<double>& P, const ArqAllocation& q) {
    check_lengths(P, q);
    int n = static_cast<int>(P.size());
    double total = 0.0;
    for (int k = 1; k <= n; ++k)
        for_each_pattern(k, [&](const std::vector<int>& bits) {
            total += sequence_term(P, q, k, bits);
        });
    return total;
}

long long count_borrowing_patterns(int k) {
    if (k < 1) throw ValidationError("count_borrowing_patterns: k must be >= 1");
    long long n = 0;
    for_each_pattern(k, [&](const std::vector<int>&) { ++n; });
    return n;
}

double pdp_csc_exact(const std::vector<double>& P, const ArqAllocation& q,
                     const NetworkLayout& layout) {
    layout.validate();
    if (layout.strategy != Strategy::CSC)
        throw ValidationError("pdp_csc_exact: layout is not cluster-based");
    if (static_cast<int>(P.size()) != layout.n_hops)
        throw ValidationError("pdp_csc_exact: outage length does not match layout");
    return run_chain(P, q, layout);
}

double pdp_exact(const std::vector<double>& P, const ArqAllocation& q,
                 const NetworkLayout& layout) {
    switch (layout.strategy) {
    case Strategy::NonCoop: return pdp_non_cooperative(P, q);
    case Strategy::SC: return pdp_sc_exact(P, q);
    case Strategy::CSC: return pdp_csc_exact(P, q, layout);
    }
    throw ValidationError("pdp_exact: unknown strategy");
}

ResidualDistribution psp_at_cluster_exit(const std::vector<double>& P, const ArqAllocation& q,
                                         const NetworkLayout& layout) {
    layout.validate();
    if (layout.strategy != Strategy::CSC || !layout.cluster)
        throw ValidationError("psp_at_cluster_exit: layout is not cluster-based");
    check_lengths(P, q);
    if (static_cast<int>(P.size()) != layout.n_hops)
        throw ValidationError("psp_at_cluster_exit: outage length does not match layout");
    const auto& c = *layout.cluster;
    std::vector<double> dist(1, 1.0);
    if (c.kase == ClusterCase::Case3) {
        // residual leaving the cluster = unused budget at the destination
        residual_dp(P, q, layout, layout.n_hops, dist, TailMode::OpenForceCounter);
    } else {
        // residual entering the last cluster node
        int upto = cluster_start(layout) + c.n_cy - 1;
        residual_dp(P, q, layout, upto, dist, TailMode::Open);
    }
    ResidualDistribution out;
    for (int r = 0; r < static_cast<int>(dist.size()); ++r) {
        if (dist[r] != 0.0) out.mass[r] = dist[r];
        out.survival += dist[r];
    }
    return out;
}

int virtual_length(const NetworkLayout& layout) {
    if (layout.strategy != Strategy::CSC || !layout.cluster) return layout.n_hops;
    const auto& c = *layout.cluster;
    if (c.kase == ClusterCase::Case3) return layout.n_hops - c.n_cy + 1;
    return layout.n_hops - (c.n_cy - 1) + 1;
}

VirtualNetwork collapse_cluster(const ArqAllocation& q, const NetworkLayout& layout) {
    layout.validate();
    if (layout.strategy != Strategy::CSC || !layout.cluster)
        throw ValidationError("collapse_cluster: layout is not cluster-based");
    if (static_cast<int>(q.size()) != layout.n_hops)
        throw ValidationError("collapse_cluster: allocation length does not match layout");
    const auto& c = *layout.cluster;
    int cs = cluster_start(layout);
    VirtualNetwork vn;
    vn.n_virtual = virtual_length(layout);
    vn.v_index = cs;
    vn.q_virtual.assign(q.begin(), q.begin() + cs);
    if (c.kase == ClusterCase::Case3) {
        vn.q_v = std::accumulate(q.begin() + cs, q.end(), 0);
        vn.q_virtual.push_back(vn.q_v);
    } else {
        vn.q_v = std::accumulate(q.begin() + cs, q.begin() + cs + c.n_cy - 1, 0);
        vn.q_v_plus_1 = q[cs + c.n_cy - 1];
        vn.q_virtual.push_back(vn.q_v);
        vn.q_virtual.push_back(*vn.q_v_plus_1);
        vn.q_virtual.insert(vn.q_virtual.end(), q.begin() + cs + c.n_cy, q.end());
    }
    return vn;
}

ArqAllocation canonicalize_cluster(const ArqAllocation& q, const NetworkLayout& layout) {
    return expand_virtual(layout, collapse_cluster(q, layout).q_virtual);
}

ArqAllocation expand_virtual(const NetworkLayout& layout, const ArqAllocation& q_virtual) {
    layout.validate();
    if (layout.strategy != Strategy::CSC || !layout.cluster) return q_virtual;
    if (static_cast<int>(q_virtual.size()) != virtual_length(layout))
        throw ValidationError("expand_virtual: virtual allocation has wrong length");
    const auto& c = *layout.cluster;
    int cs = cluster_start(layout);
    ArqAllocation q(q_virtual.begin(), q_virtual.begin() + cs);
    if (c.kase == ClusterCase::Case3) {
        q.push_back(q_virtual[cs]);
        q.insert(q.end(), c.n_cy - 1, 0);
    } else {
        q.push_back(q_virtual[cs]);
        q.insert(q.end(), c.n_cy - 2, 0);
        q.push_back(q_virtual[cs + 1]);
        q.insert(q.end(), q_virtual.begin() + cs + 2, q_virtual.end());
    }
    return q;
}

double pdp_virtual(const std::vector<double>& P, const NetworkLayout& layout,
                   const ArqAllocation& q_virtual, int cap) {
    return pdp_virtual_prefix(P, layout, q_virtual, virtual_length(layout), cap);
}

double pdp_virtual_prefix(const std::vector<double>& P, const NetworkLayout& layout,
                          const ArqAllocation& q_virtual_prefix, int j, int cap) {
    layout.validate();
    if (j < 1 || j > virtual_length(layout))
        throw ValidationError("pdp_virtual_prefix: stage index out of range");
    if (static_cast<int>(q_virtual_prefix.size()) < j)
        throw ValidationError("pdp_virtual_prefix: prefix shorter than stage");

    if (layout.strategy != Strategy::CSC || !layout.cluster) {
        ArqAllocation sub(q_virtual_prefix.begin(), q_virtual_prefix.begin() + j);
        std::vector<double> Psub(P.begin(), P.begin() + j);
        return pdp_sc_exact(Psub, sub);
    }

    int cs = cluster_start(layout);
    int len = pooled_len(layout);

    if (j <= cs) {
        // prefix lies entirely in the leading listening chain
        ArqAllocation sub(q_virtual_prefix.begin(), q_virtual_prefix.begin() + j);
        std::vector<double> Psub(P.begin(), P.begin() + j);
        return pdp_sc_exact(Psub, sub);
    }

    // run the listening chain up to the cluster, then fold the pooled
    // segment through its attempt kernel
    std::vector<double> dist(1, 1.0);
    ArqAllocation q_lead(q_virtual_prefix.begin(), q_virtual_prefix.begin() + cs);
    double drop = residual_dp(P, q_lead, NetworkLayout::sc(std::max(cs, 1)), cs, dist,
                              TailMode::Open);

    std::vector<double> kernel = segment_kernel(P, cs, len, cap);
    std::vector<double> cum(kernel.size(), 0.0);
    double run = 0.0;
    for (size_t t = 0; t < kernel.size(); ++t) {
        run += kernel[t];
        cum[t] = run;
    }

    int q_v = q_virtual_prefix[cs];
    bool v_terminal = j == cs + 1;
    std::vector<double> after; // residual mass feeding node v+1
    if (!v_terminal) after.assign(cap + 1, 0.0);
    for (int r = 0; r < static_cast<int>(dist.size()); ++r) {
        double m = dist[r];
        if (m == 0.0) continue;
        int budget = q_v + r;
        if (budget > cap)
            throw ValidationError("pdp_virtual_prefix: pooled budget exceeds cap");
        drop += m * (1.0 - cum[budget]);
        if (!v_terminal)
            for (int t = len; t <= budget; ++t)
                if (kernel[t] != 0.0) after[budget - t] += m * kernel[t];
    }
    if (v_terminal) return drop;

    // node v+1 and the trailing listening chain, all scalar hops
    int tail_nodes = j - (cs + 1);
    std::vector<double> Ptail;
    ArqAllocation qtail;
    Ptail.push_back(P[cs + len]); // last cluster hop
    qtail.push_back(q_virtual_prefix[cs + 1]);
    for (int t = 1; t < tail_nodes; ++t) {
        Ptail.push_back(P[cs + len + t]);
        qtail.push_back(q_virtual_prefix[cs + 1 + t]);
    }
    drop += residual_dp(Ptail, qtail, NetworkLayout::sc(tail_nodes), tail_nodes, after);
    return drop;
}

} // namespace arqplan
