#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "arqplan/pdp.hpp"
#include "oracles.hpp"

using namespace arqplan;

#define CHECK_NEAR(a, b, tol) CHECK(std::fabs((a) - (b)) <= (tol))

namespace {

std::vector<double> random_outage(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> u(0.05, 0.9);
    std::vector<double> p(n);
    for (double& x : p) x = u(rng);
    return p;
}

// random composition of total into n parts, zeros allowed
ArqAllocation random_allocation(std::mt19937& rng, int n, int total) {
    ArqAllocation q(n, 0);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int t = 0; t < total; ++t) q[pick(rng)]++;
    return q;
}

NetworkLayout random_cluster(std::mt19937& rng, int n) {
    // n >= 3 so a 2-hop cluster always fits
    std::uniform_int_distribution<int> cy(2, n);
    int n_cy = cy(rng);
    std::uniform_int_distribution<int> su(0, n - n_cy);
    int n_su = su(rng);
    return NetworkLayout::csc(n_su, n_cy, n - n_cy - n_su);
}

} // namespace

TEST_CASE("worked examples") {
    CHECK_NEAR(pdp_sc_exact({0.5, 0.5}, {2, 1}), 0.5, 1e-15);
    CHECK_NEAR(pdp_sc_exact({0.5, 0.1}, {3, 1}), 0.1405, 1e-15);
    // moving the last unit upstream changes nothing here: hop 2 lives off
    // residuals either way
    CHECK_NEAR(pdp_sc_exact({0.5, 0.1}, {4, 0}), 0.1405, 1e-15);
    CHECK_NEAR(pdp_non_cooperative({0.5, 0.5}, {1, 1}), 0.75, 1e-15);
    CHECK_NEAR(pdp_non_cooperative({0.5, 0.1}, {2, 2}), 0.2575, 1e-15);
}

TEST_CASE("degenerate probabilities and budgets") {
    CHECK(pdp_non_cooperative({0.3, 0.3}, {0, 2}) == 1.0);
    CHECK(pdp_sc_exact({0.3, 0.3}, {0, 2}) == 1.0); // nothing to listen to yet
    CHECK(pdp_sc_exact({0.0, 0.0}, {1, 1}) == 0.0);
    CHECK(pdp_sc_exact({1.0, 0.5}, {3, 1}) == 1.0);
    // second hop fed purely by residuals
    CHECK_NEAR(pdp_sc_exact({0.5, 0.5}, {2, 0}), 1 - 0.5 * 0.5, 1e-15);
}

TEST_CASE("evaluators match the outcome enumeration oracle") {
    std::mt19937 rng(2024);
    for (int it = 0; it < 40; ++it) {
        int n = 2 + it % 3; // 2..4 hops
        std::vector<double> P = random_outage(rng, n);
        ArqAllocation q = random_allocation(rng, n, 3 + it % 6);

        NetworkLayout nc = NetworkLayout::non_coop(n);
        CHECK_NEAR(pdp_exact(P, q, nc), oracle::pdp_enumerated(P, q, nc), 1e-12);

        NetworkLayout sc = NetworkLayout::sc(n);
        CHECK_NEAR(pdp_exact(P, q, sc), oracle::pdp_enumerated(P, q, sc), 1e-12);

        if (n >= 3) {
            NetworkLayout cs = random_cluster(rng, n);
            CHECK_NEAR(pdp_exact(P, q, cs), oracle::pdp_enumerated(P, q, cs), 1e-12);
        }
    }
}

TEST_CASE("both sc formulations agree") {
    std::mt19937 rng(77);
    for (int it = 0; it < 50; ++it) {
        std::vector<double> P = random_outage(rng, 5);
        ArqAllocation q = random_allocation(rng, 5, 5 + it % 8);
        CHECK_NEAR(pdp_sc_exact(P, q), pdp_sc_sequence_form(P, q), 1e-12);
    }
}

TEST_CASE("borrowing pattern counts follow fibonacci") {
    for (int k = 1; k <= 20; ++k)
        CHECK(count_borrowing_patterns(k) == oracle::fibonacci(k + 1));
    CHECK_THROWS_AS(count_borrowing_patterns(0), ValidationError);
}

TEST_CASE("cooperation never hurts") {
    std::mt19937 rng(99);
    for (int it = 0; it < 200; ++it) {
        int n = 3 + it % 4; // 3..6
        std::vector<double> P = random_outage(rng, n);
        ArqAllocation q = random_allocation(rng, n, n + it % 7);
        NetworkLayout cs = random_cluster(rng, n);

        double p_nc = pdp_non_cooperative(P, q);
        double p_sc = pdp_sc_exact(P, q);
        double p_cs = pdp_csc_exact(P, q, cs);
        CHECK(p_sc <= p_nc + 1e-12);
        CHECK(p_cs <= p_sc + 1e-12);
    }
}

TEST_CASE("survival mass entering the last cluster node") {
    // 2-hop cluster at the front; first node holds 2 attempts
    NetworkLayout l = NetworkLayout::csc(0, 2, 1);
    double p = 0.3;
    ResidualDistribution d = psp_at_cluster_exit({p, 0.5, 0.5}, {2, 0, 1}, l);
    CHECK_NEAR(d.mass.at(1), 1 - p, 1e-15);       // first try worked, 1 left on counter
    CHECK_NEAR(d.mass.at(0), p * (1 - p), 1e-15); // second try worked, none left
    CHECK_NEAR(d.survival, 1 - p * p, 1e-15);
}

TEST_CASE("virtual chain length per case") {
    CHECK(virtual_length(NetworkLayout::sc(5)) == 5);
    CHECK(virtual_length(NetworkLayout::non_coop(4)) == 4);
    CHECK(virtual_length(NetworkLayout::csc(0, 3, 3)) == 5); // v, v+1 replace the cluster
    CHECK(virtual_length(NetworkLayout::csc(2, 3, 1)) == 5);
    CHECK(virtual_length(NetworkLayout::csc(3, 3, 0)) == 4); // single pooled node
}

TEST_CASE("collapse and expand round trip") {
    NetworkLayout mid = NetworkLayout::csc(2, 3, 1);
    ArqAllocation q = {1, 4, 2, 0, 0, 2};
    VirtualNetwork vn = collapse_cluster(q, mid);
    CHECK(vn.n_virtual == 5);
    CHECK(vn.v_index == 2);
    CHECK(vn.q_v == 2);
    REQUIRE(vn.q_v_plus_1);
    CHECK(*vn.q_v_plus_1 == 0);
    CHECK(vn.q_virtual == ArqAllocation{1, 4, 2, 0, 2});
    CHECK(expand_virtual(mid, vn.q_virtual) == q);

    NetworkLayout back = NetworkLayout::csc(3, 3, 0);
    ArqAllocation qb = {1, 1, 1, 3, 0, 0};
    VirtualNetwork vb = collapse_cluster(qb, back);
    CHECK(vb.n_virtual == 4);
    CHECK(vb.v_index == 3);
    CHECK(vb.q_v == 3);
    CHECK(!vb.q_v_plus_1);
    CHECK(vb.q_virtual == ArqAllocation{1, 1, 1, 3});
    CHECK(expand_virtual(back, vb.q_virtual) == qb);
}

TEST_CASE("canonical form pools the cluster interior") {
    NetworkLayout mid = NetworkLayout::csc(2, 3, 1);
    CHECK(canonicalize_cluster({1, 4, 1, 1, 1, 1}, mid) == ArqAllocation{1, 4, 2, 0, 1, 1});
    NetworkLayout back = NetworkLayout::csc(3, 3, 0);
    CHECK(canonicalize_cluster({1, 1, 1, 1, 1, 1}, back) == ArqAllocation{1, 1, 1, 3, 0, 0});
}

TEST_CASE("canonical form never loses to the original split") {
    std::mt19937 rng(4242);
    for (int it = 0; it < 60; ++it) {
        int n = 4 + it % 3;
        NetworkLayout l = random_cluster(rng, n);
        std::vector<double> P = random_outage(rng, n);
        ArqAllocation q = random_allocation(rng, n, n + 3);
        ArqAllocation canon = canonicalize_cluster(q, l);
        CHECK(sum_allocation(canon) == sum_allocation(q));
        CHECK(pdp_csc_exact(P, canon, l) <= pdp_csc_exact(P, q, l) + 1e-12);
    }
}

TEST_CASE("virtual evaluation equals the physical chain") {
    std::mt19937 rng(31);
    for (int it = 0; it < 40; ++it) {
        int n = 4 + it % 3;
        NetworkLayout l = random_cluster(rng, n);
        std::vector<double> P = random_outage(rng, n);
        int q_sum = n + 4;
        ArqAllocation canon = canonicalize_cluster(random_allocation(rng, n, q_sum), l);
        VirtualNetwork vn = collapse_cluster(canon, l);
        double direct = pdp_csc_exact(P, canon, l);
        CHECK_NEAR(pdp_virtual(P, l, vn.q_virtual, q_sum), direct, 1e-12);
        CHECK_NEAR(pdp_virtual_prefix(P, l, vn.q_virtual, vn.n_virtual, q_sum), direct, 1e-12);
    }
}

TEST_CASE("stage objective is a prefix drop probability") {
    // prefix of an SC chain: stage j treats node j-1 as the destination
    std::vector<double> P = {0.4, 0.3, 0.2, 0.1};
    NetworkLayout sc = NetworkLayout::sc(4);
    ArqAllocation q = {2, 1, 1, 2};
    for (int j = 1; j <= 4; ++j) {
        std::vector<double> Pj(P.begin(), P.begin() + j);
        ArqAllocation qj(q.begin(), q.begin() + j);
        CHECK_NEAR(pdp_virtual_prefix(P, sc, q, j, 6), pdp_sc_exact(Pj, qj), 1e-15);
    }
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(pdp_sc_exact({0.5}, {1, 1}), ValidationError);
    CHECK_THROWS_AS(pdp_non_cooperative({0.5, 1.5}, {1, 1}), ValidationError);
    CHECK_THROWS_AS(pdp_sc_exact({0.5, 0.5}, {1, -1}), ValidationError);
    NetworkLayout mid = NetworkLayout::csc(2, 3, 1);
    CHECK_THROWS_AS(pdp_csc_exact({0.5, 0.5}, {1, 1}, mid), ValidationError);
    // pooled budget above the declared cap
    CHECK_THROWS_AS(pdp_virtual({0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, mid, {1, 1, 9, 1, 1}, 6),
                    ValidationError);
}
