#include "arqplan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "arqplan/parallel.hpp"

namespace arqplan {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based per-packet stream: the starting state is a bijective mix of
// (seed, packet index), so packet outcomes never depend on which thread
// simulates them.
struct PacketRng {
    std::uint64_t state;

    PacketRng(std::uint64_t seed, std::uint64_t idx)
        : state(mix64(seed + kGolden * (idx + 1))) {}

    std::uint64_t next() {
        state += kGolden;
        return mix64(state);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

struct WalkResult {
    bool delivered = false;
    int attempts = 0; // every transmission, including the failed ones
};

// One packet through the chain under the exact residual rules. fail(i)
// draws a single attempt outcome on hop i.
template <typename FailFn>
WalkResult walk_packet(const NetworkLayout& layout, const ArqAllocation& q, int n_hops,
                       FailFn&& fail) {
    WalkResult res;
    int r = 0;
    for (int i = 0; i < n_hops; ++i) {
        int budget = q[i] + r;
        if (budget == 0) return res; // nothing to transmit with
        int used = 0;
        bool crossed = false;
        while (used < budget) {
            ++used;
            if (!fail(i)) {
                crossed = true;
                break;
            }
        }
        res.attempts += used;
        if (!crossed) return res;
        if (layout.strategy == Strategy::NonCoop)
            r = 0;
        else if (layout.strategy == Strategy::CSC && layout.counter_link(i))
            r = q[i] + r - used;
        else
            r = std::max(q[i] - used, 0);
    }
    res.delivered = true;
    return res;
}

int counter_updates_per_delivery(const NetworkLayout& layout) {
    if (layout.strategy != Strategy::CSC || !layout.cluster) return 0;
    const auto& c = *layout.cluster;
    // the cluster head sets the counter for free in Case-1; everywhere else
    // every cluster node re-encrypts it
    return c.kase == ClusterCase::Case1 ? c.n_cy - 1 : c.n_cy;
}

struct Tally {
    std::map<int, long long> by_attempts; // delivered packets only
    long long dropped = 0;
    long long attempts = 0; // all packets
};

// fail_factory(rng) binds one packet's random stream and returns the
// per-attempt outcome callable.
template <typename FailFactory>
SimulationReport run_simulation(const NetworkLayout& layout, const ArqAllocation& q,
                                const DelayModel& delay, long long n_packets,
                                std::uint64_t seed, FailFactory&& fail_factory) {
    layout.validate();
    delay.validate();
    if (static_cast<int>(q.size()) != layout.n_hops)
        throw ValidationError("simulate: allocation length does not match layout");
    for (int qi : q)
        if (qi < 0) throw ValidationError("simulate: allocation entries must be >= 0");
    if (n_packets < 1) throw ValidationError("simulate: need at least one packet");

    int n_hops = layout.n_hops;
    std::vector<Tally> chunk_tally(chunk_count_for(n_packets));
    parallel_chunks(n_packets, [&](int c, long long lo, long long hi) {
        Tally& t = chunk_tally[c];
        for (long long idx = lo; idx < hi; ++idx) {
            PacketRng rng(seed, static_cast<std::uint64_t>(idx));
            WalkResult w = walk_packet(layout, q, n_hops, fail_factory(rng));
            t.attempts += w.attempts;
            if (w.delivered)
                ++t.by_attempts[w.attempts];
            else
                ++t.dropped;
        }
    });
    Tally total;
    for (const auto& t : chunk_tally) {
        total.dropped += t.dropped;
        total.attempts += t.attempts;
        for (const auto& [a, n] : t.by_attempts) total.by_attempts[a] += n;
    }

    int q_sum = sum_allocation(q);
    int updates = counter_updates_per_delivery(layout);
    SimulationReport rep;
    rep.packets = n_packets;
    rep.seed = seed;
    rep.deadline = delay.effective_deadline(q_sum);
    rep.delivered = n_packets - total.dropped;
    rep.total_attempts = total.attempts;
    rep.counter_updates = updates * rep.delivered;
    rep.pdp_hat = static_cast<double>(total.dropped) / static_cast<double>(n_packets);
    rep.w_drop = rep.pdp_hat;

    // Delivered-packet delay is affine in the attempt count, so every metric
    // reduces exactly over the per-attempt-count histogram.
    double per_attempt = delay.tau_p + delay.tau_d + delay.tau_nack;
    double fixed = updates * delay.t_c;
    if (delay.nack_on_failure_only)
        fixed -= n_hops * delay.tau_nack; // one successful attempt per hop
    long long late = 0;
    double delay_sum = 0.0;
    for (const auto& [a, n] : total.by_attempts) {
        double d = per_attempt * a + fixed;
        if (d > rep.deadline) late += n;
        delay_sum += d * static_cast<double>(n);
        int bin = static_cast<int>(std::floor(d / rep.histogram_bin_width + 1e-9));
        rep.delay_histogram[bin] += n;
    }
    rep.w_deadline = static_cast<double>(late) / static_cast<double>(n_packets);
    rep.pdv = rep.w_drop + rep.w_deadline;
    if (rep.w_drop > 0.0)
        rep.eta = rep.pdv / rep.w_drop;
    else
        rep.eta = rep.w_deadline == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    rep.avg_delay = rep.delivered > 0 ? delay_sum / static_cast<double>(rep.delivered) : 0.0;
    return rep;
}

// Conditional error probability of one attempt at SNR gamma, mirroring the
// outage integrand: exact capacity threshold without a blocklength, the
// dispersion-scaled tail otherwise.
double attempt_error_at(const LinkSpec& link, double gamma) {
    double cap = capacity(gamma);
    if (!link.blocklength) return cap < link.rate ? 1.0 : 0.0;
    double v = dispersion(gamma);
    if (v <= 0.0) {
        if (cap > link.rate) return 0.0;
        return cap < link.rate ? 1.0 : 0.5;
    }
    double k = static_cast<double>(*link.blocklength);
    return q_function(std::sqrt(k / v) * (cap - link.rate));
}

} // namespace

void DelayModel::validate() const {
    if (tau_p < 0.0 || tau_d < 0.0 || tau_nack < 0.0 || t_c < 0.0)
        throw ValidationError("delay model: all durations must be >= 0");
    if (deadline && *deadline < 0.0)
        throw ValidationError("delay model: deadline must be >= 0");
}

double DelayModel::effective_deadline(int q_sum) const {
    if (deadline) return *deadline;
    return static_cast<double>(q_sum) * (tau_p + tau_d);
}

SimulationReport simulate(const NetworkLayout& layout, const ArqAllocation& q,
                          const std::vector<double>& P, const DelayModel& delay,
                          long long n_packets, std::uint64_t seed) {
    if (P.size() != q.size())
        throw ValidationError("simulate: outage vector and allocation differ in length");
    for (double p : P)
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("simulate: outage entries must lie in [0,1]");
    auto factory = [&P](PacketRng& rng) {
        return [&P, &rng](int hop) { return rng.uniform() < P[hop]; };
    };
    return run_simulation(layout, q, delay, n_packets, seed, factory);
}

SimulationReport simulate_channel(const NetworkLayout& layout, const ArqAllocation& q,
                                  const std::vector<LinkSpec>& links, const DelayModel& delay,
                                  long long n_packets, std::uint64_t seed) {
    if (links.size() != q.size())
        throw ValidationError("simulate: link list and allocation differ in length");
    for (const auto& l : links) l.validate();
    // fading draws need a full engine, seeded once per packet from the
    // counter stream, so thread-count invariance carries over
    auto factory = [&links](PacketRng& rng) {
        return [&links, eng = std::mt19937_64(rng.next())](int hop) mutable {
            double gamma = sample_snr(links[hop], eng);
            double pe = attempt_error_at(links[hop], gamma);
            if (pe >= 1.0) return true;
            if (pe <= 0.0) return false;
            return std::uniform_real_distribution<double>(0.0, 1.0)(eng) < pe;
        };
    };
    return run_simulation(layout, q, delay, n_packets, seed, factory);
}

DelayProfile delay_profile(const SimulationReport& report) {
    DelayProfile prof;
    prof.p_nd = report.packets > 0
                    ? static_cast<double>(report.delivered) / static_cast<double>(report.packets)
                    : 0.0;
    if (report.delivered <= 0) {
        prof.empty = true;
        return prof;
    }
    for (const auto& [bin, count] : report.delay_histogram) {
        DelayProfileRow row;
        row.delay_low = bin * report.histogram_bin_width;
        row.count = count;
        row.mass = static_cast<double>(count) / static_cast<double>(report.delivered);
        prof.rows.push_back(row);
    }
    return prof;
}

} // namespace arqplan
