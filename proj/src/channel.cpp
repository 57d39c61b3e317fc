#include "arqplan/channel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace arqplan {

namespace {

constexpr double kLog2e = 1.4426950408889634074; // 1/ln(2)

// Absolute tolerance per quadrature segment; the reported estimate for a
// full outage evaluation stays well under 1e-10.
constexpr double kSegmentTol = 2.5e-13;
constexpr int kMaxDepth = 60;

struct QuadAccum {
    double err = 0.0;
    bool depth_hit = false;
};

double simpson_step(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double b, double fa, double fm,
             double fb, double whole, double tol, int depth, QuadAccum& acc) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson_step(a, m, fa, flm, fm);
    double right = simpson_step(m, b, fm, frm, fb);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol || depth <= 0) {
        if (depth <= 0 && std::abs(delta) > 15.0 * tol) acc.depth_hit = true;
        acc.err += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, acc) +
           adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, acc);
}

double integrate(const std::function<double(double)>& f, double a, double b, QuadAccum& acc) {
    if (!(b > a)) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    return adapt(f, a, b, fa, fm, fb, simpson_step(a, b, fa, fm, fb), kSegmentTol, kMaxDepth, acc);
}

// Density support is effectively inside this bound: the exponent term falls
// below e^-37 at the edge and the extra 10*alpha absorbs the polynomial
// prefactor, leaving a tail under 1e-14.
double upper_truncation(double c, double alpha) {
    double s = std::sqrt(c) + std::sqrt(37.0 * (1.0 - c));
    return alpha * s * s + 10.0 * alpha;
}

// Failure probability of one decoding attempt at instantaneous SNR gamma.
double attempt_error(double gamma, double rate, const std::optional<int>& blocklength) {
    double cap = capacity(gamma);
    if (!blocklength) return cap < rate ? 1.0 : 0.0;
    double v = dispersion(gamma);
    if (v <= 0.0) return cap < rate ? 1.0 : (cap > rate ? 0.0 : 0.5);
    return q_function(std::sqrt(static_cast<double>(*blocklength) / v) * (cap - rate));
}

} // namespace

double LinkSpec::snr_linear() const { return std::pow(10.0, snr_db / 10.0); }

void LinkSpec::validate() const {
    if (!(los_c >= 0.0 && los_c <= 1.0))
        throw ValidationError("link.los_c: must lie in [0,1]");
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw ValidationError("link.rate: must be positive and finite");
    if (!std::isfinite(snr_db))
        throw ValidationError("link.snr_db: must be finite");
    if (blocklength && *blocklength < 1)
        throw ValidationError("link.blocklength: must be >= 1 when finite");
}

double q_function(double x) {
    if (!std::isfinite(x)) return x > 0 ? 0.0 : 1.0;
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double capacity(double gamma) {
    if (gamma < 0.0) throw ValidationError("capacity: gamma must be >= 0");
    return std::log2(1.0 + gamma);
}

double dispersion(double gamma) {
    if (gamma < 0.0) throw ValidationError("dispersion: gamma must be >= 0");
    double g1 = gamma + 1.0;
    return 0.5 * gamma * (gamma + 2.0) / (g1 * g1) * kLog2e * kLog2e;
}

double bessel_i0e(double z) {
    if (z < 0.0) throw ValidationError("bessel_i0e: argument must be >= 0");
    if (z < 20.0) {
        // power series times exp(-z); converges fast for moderate z
        double term = 1.0, sum = 1.0, quarter = 0.25 * z * z;
        for (int k = 1; k < 200; ++k) {
            term *= quarter / (static_cast<double>(k) * k);
            sum += term;
            if (term < sum * 1e-18) break;
        }
        return std::exp(-z) * sum;
    }
    // asymptotic series: i0e(z) ~ (2*pi*z)^(-1/2) * sum a_k / z^k with
    // a_k = prod_{j<=k} (2j-1)^2 / (8^k k!)
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 30; ++k) {
        double odd = 2.0 * k - 1.0;
        double next = term * odd * odd / (8.0 * k * z);
        if (next >= term) break; // series started diverging
        term = next;
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

double snr_pdf(const LinkSpec& link, double gamma) {
    link.validate();
    if (gamma < 0.0) throw ValidationError("snr_pdf: gamma must be >= 0");
    double c = link.los_c;
    if (c >= 1.0)
        throw ValidationError("snr_pdf: los_c = 1 is a point mass at alpha, not a density");
    double alpha = link.snr_linear();
    double omc = 1.0 - c;
    double ratio = gamma / alpha;
    // exp(-(g/a + c)/(1-c)) * I0(2 sqrt(c g/a)/(1-c)) rewritten through the
    // scaled Bessel function so large LOS terms cannot overflow
    double diff = std::sqrt(ratio) - std::sqrt(c);
    double expo = std::exp(-diff * diff / omc);
    double z = 2.0 * std::sqrt(c * ratio) / omc;
    return expo * bessel_i0e(z) / (omc * alpha);
}

QuadratureResult outage_probability_detailed(const LinkSpec& link) {
    link.validate();
    double alpha = link.snr_linear();
    double rate = link.rate;

    if (link.los_c >= 1.0) {
        // deterministic SNR: single Q evaluation, no quadrature
        QuadratureResult r;
        r.converged = true;
        if (link.blocklength) {
            r.value = attempt_error(alpha, rate, link.blocklength);
        } else {
            r.value = capacity(alpha) < rate ? 1.0 : 0.0;
        }
        return r;
    }

    double threshold = std::pow(2.0, rate) - 1.0;
    double upper = upper_truncation(link.los_c, alpha);
    auto pdf = [&](double g) { return snr_pdf(link, g); };

    QuadAccum acc;
    double value;
    if (!link.blocklength) {
        value = integrate(pdf, 0.0, std::min(threshold, upper), acc);
    } else {
        auto integrand = [&](double g) { return attempt_error(g, rate, link.blocklength) * pdf(g); };
        // split at the capacity threshold where the Q factor crosses 1/2
        value = integrate(integrand, 0.0, std::min(threshold, upper), acc);
        if (threshold < upper) value += integrate(integrand, threshold, upper, acc);
    }
    QuadratureResult r;
    r.value = std::clamp(value, 0.0, 1.0);
    r.error_estimate = acc.err;
    r.converged = !acc.depth_hit && acc.err <= 1e-10;
    return r;
}

double outage_probability(const LinkSpec& link) {
    QuadratureResult r = outage_probability_detailed(link);
    if (!r.converged)
        throw NumericError("outage_probability: quadrature did not converge, error estimate " +
                           std::to_string(r.error_estimate));
    return r.value;
}

std::vector<double> outage_profile(const std::vector<LinkSpec>& links) {
    std::vector<double> p;
    p.reserve(links.size());
    for (const auto& l : links) p.push_back(outage_probability(l));
    return p;
}

double sample_snr(const LinkSpec& link, std::mt19937_64& rng) {
    link.validate();
    double alpha = link.snr_linear();
    double c = link.los_c;
    if (c >= 1.0) return alpha;
    std::normal_distribution<double> unit(0.0, 1.0);
    double mean = std::sqrt(0.5 * c);
    double sd = std::sqrt(0.5 * (1.0 - c));
    double re = mean + sd * unit(rng);
    double im = mean + sd * unit(rng);
    return (re * re + im * im) * alpha;
}

} // namespace arqplan
