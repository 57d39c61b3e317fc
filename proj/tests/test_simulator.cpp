#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "arqplan/pdp.hpp"
#include "arqplan/simulator.hpp"

using namespace arqplan;

#define CHECK_NEAR(a, b, tol) CHECK(std::fabs((a) - (b)) <= (tol))

namespace {

DelayModel delays(double tau_nack = 0.0, double t_c = 0.0) {
    DelayModel d;
    d.tau_p = 0.5;
    d.tau_d = 0.5;
    d.tau_nack = tau_nack;
    d.t_c = t_c;
    return d;
}

bool same_report(const SimulationReport& a, const SimulationReport& b) {
    return a.pdp_hat == b.pdp_hat && a.avg_delay == b.avg_delay && a.w_drop == b.w_drop &&
           a.w_deadline == b.w_deadline && a.pdv == b.pdv && a.delivered == b.delivered &&
           a.total_attempts == b.total_attempts && a.counter_updates == b.counter_updates &&
           a.delay_histogram == b.delay_histogram;
}

} // namespace

TEST_CASE("thread caps never change the outcome") {
    NetworkLayout l = NetworkLayout::csc(2, 3, 1);
    std::vector<double> P = {0.3, 0.2, 0.4, 0.1, 0.25, 0.35};
    ArqAllocation q = {2, 2, 3, 0, 0, 2};
    DelayModel d = delays(0.1, 0.2);

    auto base = simulate(l, q, P, d, 60000, 42);
    setenv("ARQPLAN_THREADS", "1", 1);
    auto one = simulate(l, q, P, d, 60000, 42);
    setenv("ARQPLAN_THREADS", "5", 1);
    auto five = simulate(l, q, P, d, 60000, 42);
    unsetenv("ARQPLAN_THREADS");
    CHECK(same_report(base, one));
    CHECK(same_report(base, five));

    // and the stream really depends on the seed
    auto other = simulate(l, q, P, d, 60000, 43);
    CHECK(base.total_attempts != other.total_attempts);
}

TEST_CASE("deterministic success pins every metric") {
    NetworkLayout l = NetworkLayout::sc(3);
    std::vector<double> P = {0.0, 0.0, 0.0};
    ArqAllocation q = {1, 1, 1};
    auto rep = simulate(l, q, P, delays(0.1), 1000, 9);

    CHECK(rep.packets == 1000);
    CHECK(rep.delivered == 1000);
    CHECK(rep.pdp_hat == 0.0);
    CHECK(rep.w_drop == 0.0);
    CHECK(rep.total_attempts == 3000);
    CHECK(rep.counter_updates == 0);
    CHECK_NEAR(rep.avg_delay, 3 * 1.1, 1e-12);
    REQUIRE(rep.delay_histogram.size() == 1);
    CHECK(rep.delay_histogram.begin()->first == 33); // floor(3.3 / 0.1), one bin
    CHECK(rep.delay_histogram.begin()->second == 1000);

    // charging the nack only on failures removes one tau_nack per hop here
    DelayModel dn = delays(0.1);
    dn.nack_on_failure_only = true;
    auto rep2 = simulate(l, q, P, dn, 1000, 9);
    CHECK_NEAR(rep2.avg_delay, 3.0, 1e-12);
}

TEST_CASE("certain first hop failure drops everything") {
    NetworkLayout l = NetworkLayout::sc(2);
    auto rep = simulate(l, {2, 1}, {1.0, 0.1}, delays(), 500, 3);
    CHECK(rep.delivered == 0);
    CHECK(rep.pdp_hat == 1.0);
    CHECK(rep.w_drop == 1.0);
    CHECK(rep.total_attempts == 1000); // both attempts burned per packet
    CHECK(rep.avg_delay == 0.0);
    CHECK(rep.eta == 1.0); // no deadline misses on top of total loss

    DelayProfile prof = delay_profile(rep);
    CHECK(prof.empty);
    CHECK(prof.p_nd == 0.0);
    CHECK(prof.rows.empty());
}

TEST_CASE("monte carlo tracks the exact evaluator") {
    NetworkLayout l = NetworkLayout::sc(4);
    std::vector<double> P = {0.3, 0.15, 0.4, 0.2};
    ArqAllocation q = {2, 1, 2, 1};
    const long long n = 300000;
    auto rep = simulate(l, q, P, delays(), n, 1234);
    double exact = pdp_sc_exact(P, q);
    double sigma = std::sqrt(exact * (1 - exact) / n);
    CHECK_NEAR(rep.pdp_hat, exact, 4 * sigma);
}

TEST_CASE("deadline accounting") {
    NetworkLayout l = NetworkLayout::sc(3);
    std::vector<double> P = {0.25, 0.3, 0.2};
    ArqAllocation q = {2, 2, 2};

    // tau_nack = 0 and the default deadline: nothing can be late
    auto rep0 = simulate(l, q, P, delays(), 50000, 8);
    CHECK(rep0.deadline == 6.0);
    CHECK(rep0.w_deadline == 0.0);
    CHECK(rep0.eta == 1.0);
    CHECK(rep0.pdv == rep0.w_drop);

    // lateness and average delay grow with the nack cost, same seed
    double prev_late = -1.0, prev_avg = -1.0;
    for (double tn : {0.2, 0.4, 0.6, 1.0}) {
        auto rep = simulate(l, q, P, delays(tn), 50000, 8);
        CHECK(rep.w_deadline >= prev_late);
        CHECK(rep.avg_delay >= prev_avg);
        CHECK_NEAR(rep.pdv, rep.w_drop + rep.w_deadline, 1e-15);
        CHECK(rep.eta >= 1.0);
        prev_late = rep.w_deadline;
        prev_avg = rep.avg_delay;
    }

    // explicit deadline override
    DelayModel tight = delays();
    tight.deadline = 3.0; // three hops need 3.0 exactly; late needs > 3.0
    auto rep_tight = simulate(l, q, P, tight, 50000, 8);
    CHECK(rep_tight.deadline == 3.0);
    // every retransmission pushes past 3.0
    CHECK(rep_tight.w_deadline > 0.0);

    CHECK_THROWS_AS(delays(-0.1).validate(), ValidationError);
}

TEST_CASE("counter cost applies only to counter strategies") {
    std::vector<double> P6 = {0.3, 0.2, 0.4, 0.1, 0.25, 0.35};
    ArqAllocation q6 = {2, 2, 3, 0, 0, 2};

    // listening only: t_c must not move anything
    NetworkLayout sc = NetworkLayout::sc(6);
    auto sc_a = simulate(sc, q6, P6, delays(0.1, 0.0), 40000, 77);
    auto sc_b = simulate(sc, q6, P6, delays(0.1, 0.9), 40000, 77);
    CHECK(sc_a.counter_updates == 0);
    CHECK(sc_a.pdv == sc_b.pdv);
    CHECK(sc_a.avg_delay == sc_b.avg_delay);

    // cluster cases pay per delivered packet: front pays n_cy - 1, the others n_cy
    struct Cfg {
        int n_su, n_cy, n_sw, updates;
    };
    for (Cfg c : {Cfg{0, 3, 3, 2}, Cfg{2, 3, 1, 3}, Cfg{3, 3, 0, 3}}) {
        NetworkLayout l = NetworkLayout::csc(c.n_su, c.n_cy, c.n_sw);
        std::vector<double> zeros(6, 0.0);
        ArqAllocation q(6, 1); // one attempt everywhere keeps every hop alive
        q[c.n_su] += 3;
        double t_c = 0.4;
        auto paid = simulate(l, q, zeros, delays(0.0, t_c), 2000, 5);
        auto free_run = simulate(l, q, zeros, delays(0.0, 0.0), 2000, 5);
        CHECK(paid.delivered == 2000);
        CHECK(paid.counter_updates == 2000LL * c.updates);
        CHECK_NEAR(paid.avg_delay - free_run.avg_delay, c.updates * t_c, 1e-12);
    }

    // with real losses the counter cost can only hurt the deadline
    NetworkLayout mid = NetworkLayout::csc(2, 3, 1);
    double prev = -1.0;
    for (double tc : {0.0, 0.35, 0.7}) {
        auto rep = simulate(mid, q6, P6, delays(0.1, tc), 40000, 11);
        CHECK(rep.pdv >= prev);
        prev = rep.pdv;
    }
}

TEST_CASE("histogram is a complete partition of delivered packets") {
    NetworkLayout l = NetworkLayout::sc(3);
    std::vector<double> P = {0.3, 0.3, 0.3};
    auto rep = simulate(l, {2, 2, 2}, P, delays(0.25), 30000, 21);
    long long total = 0;
    for (auto& [bin, cnt] : rep.delay_histogram) {
        CHECK(bin >= 0);
        total += cnt;
    }
    CHECK(total == rep.delivered);
    CHECK(rep.histogram_bin_width == 0.1);

    DelayProfile prof = delay_profile(rep);
    CHECK(!prof.empty);
    CHECK_NEAR(prof.p_nd, 1.0 - rep.pdp_hat, 1e-15);
    double mass = 0.0;
    for (auto& row : prof.rows) {
        mass += row.mass;
        CHECK_NEAR(row.delay_low * 10.0, std::round(row.delay_low * 10.0), 1e-9);
    }
    CHECK_NEAR(mass, 1.0, 1e-12);
}

TEST_CASE("fading channel simulation") {
    LinkSpec pure;
    pure.los_c = 1.0;
    pure.snr_db = 10.0;
    pure.rate = 1.0; // capacity log2(11) > 1: never fails asymptotically
    std::vector<LinkSpec> links = {pure, pure};
    NetworkLayout l = NetworkLayout::sc(2);
    auto rep = simulate_channel(l, {1, 1}, links, delays(), 2000, 17);
    CHECK(rep.delivered == 2000);
    CHECK(rep.total_attempts == 4000);

    LinkSpec fading = pure;
    fading.los_c = 0.4;
    fading.blocklength = 500;
    std::vector<LinkSpec> flinks = {fading, fading};
    const long long n = 120000;
    auto frep = simulate_channel(l, {2, 2}, flinks, delays(), n, 19);
    double p = outage_probability(fading);
    double exact = pdp_sc_exact({p, p}, {2, 2});
    double sigma = std::sqrt(exact * (1 - exact) / n);
    CHECK_NEAR(frep.pdp_hat, exact, 4 * sigma);

    // reproducible across thread caps as well
    setenv("ARQPLAN_THREADS", "3", 1);
    auto frep2 = simulate_channel(l, {2, 2}, flinks, delays(), n, 19);
    unsetenv("ARQPLAN_THREADS");
    CHECK(same_report(frep, frep2));
}

TEST_CASE("report echoes its inputs") {
    NetworkLayout l = NetworkLayout::sc(2);
    auto rep = simulate(l, {2, 2}, {0.2, 0.2}, delays(), 1000, 31337);
    CHECK(rep.seed == 31337);
    CHECK(rep.packets == 1000);
    CHECK(rep.deadline == 4.0);

    DelayModel d = delays();
    d.deadline = 2.5;
    CHECK(d.effective_deadline(4) == 2.5);
    CHECK(delays().effective_deadline(4) == 4.0);
}
