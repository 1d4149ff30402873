#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace pointerlab {

struct OutcomeHistogram {
    std::vector<std::uint64_t> counts;
    std::vector<double> expected;

    OutcomeHistogram(std::vector<std::uint64_t> c, std::vector<double> p) : counts(std::move(c)), expected(std::move(p)) {
        if (counts.size() != expected.size() || counts.empty()) throw ConfigError("histogram counts and expectations differ in length");
        const double s = std::accumulate(expected.begin(), expected.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-12) throw ConfigError("expected probabilities must sum to 1");
        for (double p_k : expected)
            if (p_k < 0.0) throw ConfigError("expected probabilities must be non-negative");
        if (total() == 0) throw ConfigError("histogram is empty");
    }

    std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }
    double frequency(std::size_t k) const { return static_cast<double>(counts[k]) / static_cast<double>(total()); }
};

/// H(f|p) = sum f_k ln(f_k/p_k) with 0 ln 0 = 0.
inline double relative_entropy(const OutcomeHistogram& h) {
    double s = 0.0;
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        if (h.counts[k] == 0) continue;
        if (!(h.expected[k] > 0.0)) throw SupportError("observed outcome has zero expected probability");
        const double f = h.frequency(k);
        s += f * std::log(f / h.expected[k]);
    }
    return std::max(0.0, s);
}

/// chi^2 = n sum (f_k - p_k)^2 / p_k.
inline double chi_square_statistic(const OutcomeHistogram& h) {
    double s = 0.0;
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        if (!(h.expected[k] > 0.0)) throw SupportError("chi-square needs positive expected probabilities");
        const double d = h.frequency(k) - h.expected[k];
        s += d * d / h.expected[k];
    }
    return static_cast<double>(h.total()) * s;
}

/// Regularized lower incomplete gamma P(a, x): power series below a + 1,
/// Lentz continued fraction for Q above.
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw DomainError("regularized_gamma_p needs a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
    constexpr double eps = 1e-16;
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term;
        for (int n = 1; n < 10000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * eps) break;
        }
        return std::min(1.0, sum * std::exp(log_prefactor));
    }
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::max(0.0, 1.0 - std::exp(log_prefactor) * h);
}

inline double chi_square_cdf(double dof, double x) { return x <= 0.0 ? 0.0 : regularized_gamma_p(0.5 * dof, 0.5 * x); }

inline double chi_square_pdf(double dof, double x) {
    if (x <= 0.0) return 0.0;
    const double k = 0.5 * dof;
    return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
}

/// Q with P(chi^2_dof <= Q) = alpha, by bracketing, bisection and Newton polish.
inline double chi_square_quantile(double dof, double alpha) {
    if (!(dof >= 1.0)) throw DomainError("chi_square_quantile needs dof >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("chi_square_quantile needs alpha in (0, 1)");
    double lo = 0.0, hi = std::max(1.0, dof);
    while (chi_square_cdf(dof, hi) < alpha) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-10 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (chi_square_cdf(dof, mid) < alpha ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 5; ++i) {
        const double f = chi_square_pdf(dof, x);
        if (!(f > 0.0)) break;
        const double next = x - (chi_square_cdf(dof, x) - alpha) / f;
        if (!(next > lo && next < hi)) break;
        x = next;
    }
    return x;
}

/// Standard deviation of a binomial count fraction.
inline double binomial_sigma(double p, std::uint64_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

inline bool within_binomial(std::uint64_t successes, std::uint64_t n, double p, double n_sigma = 3.0) {
    const double f = static_cast<double>(successes) / static_cast<double>(n);
    return std::abs(f - p) <= n_sigma * binomial_sigma(p, n);
}

struct Interval {
    double lower;
    double upper;
};

inline Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 3.0) {
    const double nn = static_cast<double>(n);
    const double f = static_cast<double>(successes) / nn;
    const double denom = 1.0 + z * z / nn;
    const double center = (f + z * z / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(f * (1.0 - f) / nn + z * z / (4.0 * nn * nn)) / denom;
    return {center - half, center + half};
}

struct KsResult {
    double statistic;
    double p_value;
};

/// One-sample Kolmogorov-Smirnov test against U(0, 1) with the asymptotic
/// Kolmogorov distribution (Stephens' small-sample correction).
inline KsResult ks_uniform(std::vector<double> samples) {
    if (samples.empty()) throw ConfigError("ks_uniform needs samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double u = std::clamp(samples[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        p += term;
        if (std::abs(term) < 1e-12) break;
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

/// Multinomial draw by sequential conditional binomials.
inline std::vector<std::uint64_t> multinomial_sample(const std::vector<double>& p, std::uint64_t n, RngStream& rng) {
    std::vector<std::uint64_t> counts(p.size(), 0);
    double remaining_mass = 1.0;
    std::uint64_t remaining = n;
    for (std::size_t k = 0; k + 1 < p.size() && remaining > 0; ++k) {
        const double prob = remaining_mass > 0.0 ? std::clamp(p[k] / remaining_mass, 0.0, 1.0) : 0.0;
        counts[k] = std::binomial_distribution<std::uint64_t>(remaining, prob)(rng.engine());
        remaining -= counts[k];
        remaining_mass -= p[k];
    }
    counts.back() += remaining;
    return counts;
}

}  // namespace pointerlab
