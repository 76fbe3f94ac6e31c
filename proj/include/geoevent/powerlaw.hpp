#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "geoevent/config.hpp"
#include "geoevent/types.hpp"

namespace geoevent {

/// Multiset of positive integer observations.
using CountSample = std::vector<std::int64_t>;

inline constexpr double kAlphaMin = 1.01;
inline constexpr double kAlphaMax = 6.0;

/// Hurwitz zeta, sum over k >= 0 of (q + k)^-s, for s > 1 and q > 0.
/// Direct summation up to q + N >= 10 followed by an Euler-Maclaurin tail.
double hurwitz_zeta(double s, double q);

/// Log-likelihood of the tail (x >= xmin) under a discrete power law.
double log_likelihood(std::span<const std::int64_t> counts, std::int64_t xmin, double alpha);

struct AlphaFit {
    double alpha = 0.0;
    double log_likelihood = 0.0;
    bool at_boundary = false;  // the optimum sits on the search interval edge
    std::size_t n_tail = 0;
};

/// Maximum-likelihood exponent on (kAlphaMin, kAlphaMax] via Brent's method.
/// Throws FitError when no observation reaches xmin. Fewer than two distinct
/// tail values cannot identify alpha; the result is then flagged at_boundary.
AlphaFit fit_alpha(std::span<const std::int64_t> counts, std::int64_t xmin);

/// Kolmogorov-Smirnov distance between the empirical tail CDF and the fitted
/// model CDF, maximised over the integer support of the tail.
double ks_statistic(std::span<const std::int64_t> counts, std::int64_t xmin, double alpha);

struct PowerLawFit {
    double alpha = 0.0;
    std::int64_t xmin = 1;
    double ks_stat = 0.0;
    double p_value = -1.0;  // negative until goodness_of_fit has run
    std::size_t n_tail = 0;
    bool degenerate = false;
};

/// Scans xmin over the distinct observed values (tail of at least
/// `min_tail` observations with at least two distinct values), refits alpha
/// for each and keeps the KS-minimising candidate (ties: smaller xmin).
/// Throws FitError with fewer than `min_tail` observations or no admissible
/// xmin.
PowerLawFit fit(std::span<const std::int64_t> counts, int min_tail = 10);

/// Draws from the discrete power law with the given exponent and lower bound
/// by inverting its CDF.
class PowerLawSampler {
public:
    PowerLawSampler(double alpha, std::int64_t xmin);
    std::int64_t operator()(std::mt19937_64& rng) const;

private:
    double ccdf(std::int64_t x) const;  // P(X >= x)

    double alpha_;
    std::int64_t xmin_;
    double norm_;
    std::vector<double> table_;  // ccdf(xmin + i)
};

/// Semi-parametric bootstrap p-value: each synthetic set draws its tail from
/// the fitted model and its head from the observed sub-xmin values, is refit
/// from scratch, and counts when its KS distance reaches the observed one.
/// Iteration i uses the RNG stream derive_seed(seed, i), so the result is the
/// same for any thread count.
double goodness_of_fit(std::span<const std::int64_t> counts, const PowerLawFit& fitted,
                       int iterations, std::uint64_t seed, int min_tail = 10, int threads = 1);

/// Keyword occurrence counts within a candidate: one entry per distinct
/// keyword (hashtags, mentions and capitalised phrases), excluding `excluded`.
CountSample keyword_counts(const EventCandidate& candidate,
                           const std::vector<std::string>& excluded = {});

struct PowerLawDecision {
    bool passes = false;
    std::optional<PowerLawFit> fit;
    std::string reason;
};

/// Fits the candidate's keyword counts and tests the fit by bootstrap;
/// passes iff the fit is non-degenerate and p >= powerlaw_pvalue_threshold.
/// Never throws for data reasons.
PowerLawDecision passes_powerlaw(const EventCandidate& candidate, const DetectorConfig& config,
                                 std::uint64_t seed);

}  // namespace geoevent
