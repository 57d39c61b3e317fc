#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "arqplan/errors.hpp"

namespace arqplan {

// One fading link. SNR is the average received SNR in dB; los_c splits the
// unit channel power between a deterministic line-of-sight part (c) and a
// Rayleigh-scattered part (1-c). blocklength empty means the infinite-K
// limit, where decoding fails exactly when the rate exceeds capacity.
struct LinkSpec {
    double los_c = 0.0;
    double snr_db = 0.0;
    double rate = 1.0;
    std::optional<int> blocklength; // K; empty = asymptotic

    double snr_linear() const;
    void validate() const;
};

struct OutageProfile {
    std::vector<double> p;
};

// Gaussian tail probability Q(x) = P(N(0,1) > x).
double q_function(double x);

// Shannon capacity log2(1 + gamma), gamma >= 0.
double capacity(double gamma);

// Channel dispersion V(gamma) = (gamma/2)(gamma+2)/(gamma+1)^2 * log2(e)^2.
double dispersion(double gamma);

// Scaled modified Bessel function exp(-z) * I0(z), z >= 0. Exposed because
// the SNR density is computed through it and tests pin its accuracy.
double bessel_i0e(double z);

// Density of the instantaneous SNR Gamma = |h|^2 * alpha at `gamma`.
// Requires los_c < 1; the pure-LOS channel is a point mass at alpha and is
// handled inside outage_probability directly.
double snr_pdf(const LinkSpec& link, double gamma);

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = false;
};

// Decoding-error probability of one link. Finite K integrates
// Q(sqrt(K/V(g)) * (C(g) - R)) against the SNR density; the asymptotic mode
// returns the SNR CDF at the rate threshold 2^R - 1.
double outage_probability(const LinkSpec& link); // throws NumericError if quadrature fails
QuadratureResult outage_probability_detailed(const LinkSpec& link);

std::vector<double> outage_profile(const std::vector<LinkSpec>& links);

// Draws one instantaneous SNR realization. Caller owns the RNG stream.
double sample_snr(const LinkSpec& link, std::mt19937_64& rng);

} // namespace arqplan
