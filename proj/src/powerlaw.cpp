#include "geoevent/powerlaw.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "geoevent/seed.hpp"
#include "geoevent/text.hpp"

namespace geoevent {

namespace {

// B_{2j} / (2j)! for j = 1..8.
constexpr double kBernoulliOverFactorial[] = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
};

constexpr double kBoundaryTolerance = 1e-3;
constexpr int kBrentBits = 20;
constexpr std::int64_t kSampleCap = 1'000'000'000'000'000;
constexpr std::size_t kSamplerTable = 4096;

// Distinct values of a sample in ascending order with suffix statistics, so
// every xmin candidate reads its tail in O(1).
struct TailSummary {
    std::vector<std::int64_t> values;
    std::vector<std::size_t> counts;
    std::vector<std::size_t> suffix_n;   // observations >= values[i]
    std::vector<double> suffix_log;      // sum of ln x over those observations

    explicit TailSummary(std::span<const std::int64_t> sample) {
        std::vector<std::int64_t> sorted(sample.begin(), sample.end());
        std::sort(sorted.begin(), sorted.end());
        for (std::int64_t v : sorted) {
            if (v < 1) throw FitError("counts must be positive integers");
            if (values.empty() || values.back() != v) {
                values.push_back(v);
                counts.push_back(0);
            }
            ++counts.back();
        }
        suffix_n.assign(values.size() + 1, 0);
        suffix_log.assign(values.size() + 1, 0.0);
        for (std::size_t i = values.size(); i-- > 0;) {
            suffix_n[i] = suffix_n[i + 1] + counts[i];
            suffix_log[i] = suffix_log[i + 1] +
                            static_cast<double>(counts[i]) * std::log(static_cast<double>(values[i]));
        }
    }

    // Index of the first value >= xmin.
    std::size_t first_at_least(std::int64_t xmin) const {
        return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), xmin) -
                                        values.begin());
    }
};

AlphaFit fit_alpha_tail(std::size_t n, double sum_log, std::int64_t xmin) {
    const double q = static_cast<double>(xmin);
    const double dn = static_cast<double>(n);
    auto negative_ll = [&](double a) { return dn * std::log(hurwitz_zeta(a, q)) + a * sum_log; };
    const auto [alpha, nll] =
        boost::math::tools::brent_find_minima(negative_ll, kAlphaMin, kAlphaMax, kBrentBits);
    AlphaFit out;
    out.alpha = alpha;
    out.log_likelihood = -nll;
    out.n_tail = n;
    out.at_boundary =
        alpha - kAlphaMin < kBoundaryTolerance || kAlphaMax - alpha < kBoundaryTolerance;
    return out;
}

// Evaluated at every observed value and just before the next one, which is
// where |empirical - model| peaks between jumps of the empirical CDF.
double ks_tail(const TailSummary& s, std::size_t first, std::int64_t xmin, double alpha) {
    const double z = hurwitz_zeta(alpha, static_cast<double>(xmin));
    const double n = static_cast<double>(s.suffix_n[first]);
    double worst = 0.0;
    if (s.values[first] > xmin) {
        worst = 1.0 - hurwitz_zeta(alpha, static_cast<double>(s.values[first])) / z;
    }
    double cum = 0.0;
    for (std::size_t j = first; j < s.values.size(); ++j) {
        cum += static_cast<double>(s.counts[j]);
        const double empirical = cum / n;
        const double v = static_cast<double>(s.values[j]);
        worst = std::max(worst, std::abs(empirical - (1.0 - hurwitz_zeta(alpha, v + 1.0) / z)));
        if (j + 1 < s.values.size() && s.values[j + 1] > s.values[j] + 1) {
            const double next = static_cast<double>(s.values[j + 1]);
            worst = std::max(worst, std::abs(empirical - (1.0 - hurwitz_zeta(alpha, next) / z)));
        }
    }
    return worst;
}

}  // namespace

double hurwitz_zeta(double s, double q) {
    if (!(s > 1.0) || !(q > 0.0)) throw FitError("hurwitz_zeta requires s > 1 and q > 0");
    double sum = 0.0;
    double a = q;
    while (a < 10.0) {
        sum += std::pow(a, -s);
        a += 1.0;
    }
    const double a_pow = std::pow(a, -s);
    sum += a * a_pow / (s - 1.0) + 0.5 * a_pow;
    double factor = s * a_pow / a;  // s (s+1) ... (s+2j-2) a^{-s-2j+1}
    const double inv_a2 = 1.0 / (a * a);
    for (int j = 0; j < 8; ++j) {
        sum += kBernoulliOverFactorial[j] * factor;
        const double k = 2.0 * j + 1.0;
        factor *= (s + k) * (s + k + 1.0) * inv_a2;
    }
    return sum;
}

double log_likelihood(std::span<const std::int64_t> counts, std::int64_t xmin, double alpha) {
    std::size_t n = 0;
    double sum_log = 0.0;
    for (std::int64_t x : counts) {
        if (x < xmin) continue;
        ++n;
        sum_log += std::log(static_cast<double>(x));
    }
    return -static_cast<double>(n) * std::log(hurwitz_zeta(alpha, static_cast<double>(xmin))) -
           alpha * sum_log;
}

AlphaFit fit_alpha(std::span<const std::int64_t> counts, std::int64_t xmin) {
    if (xmin < 1) throw FitError("xmin must be at least 1");
    const TailSummary s(counts);
    const std::size_t first = s.first_at_least(xmin);
    if (first == s.values.size()) {
        throw FitError("no observations at or above xmin = " + std::to_string(xmin));
    }
    AlphaFit out = fit_alpha_tail(s.suffix_n[first], s.suffix_log[first], xmin);
    if (first + 1 == s.values.size()) out.at_boundary = true;
    return out;
}

double ks_statistic(std::span<const std::int64_t> counts, std::int64_t xmin, double alpha) {
    const TailSummary s(counts);
    const std::size_t first = s.first_at_least(xmin);
    if (first == s.values.size()) {
        throw FitError("no observations at or above xmin = " + std::to_string(xmin));
    }
    return ks_tail(s, first, xmin, alpha);
}

PowerLawFit fit(std::span<const std::int64_t> counts, int min_tail) {
    if (min_tail < 1) throw FitError("min_tail must be positive");
    if (counts.size() < static_cast<std::size_t>(min_tail)) {
        throw FitError("need at least " + std::to_string(min_tail) + " observations, got " +
                       std::to_string(counts.size()));
    }
    const TailSummary s(counts);
    const auto tail_min = static_cast<std::size_t>(min_tail);

    std::optional<PowerLawFit> best;
    for (std::size_t i = 0; i + 1 < s.values.size() && s.suffix_n[i] >= tail_min; ++i) {
        const AlphaFit af = fit_alpha_tail(s.suffix_n[i], s.suffix_log[i], s.values[i]);
        const double d = ks_tail(s, i, s.values[i], af.alpha);
        if (af.at_boundary) continue;
        if (!best || d < best->ks_stat) {
            best = PowerLawFit{af.alpha, s.values[i], d, -1.0, af.n_tail, af.at_boundary};
        }
    }
    if (!best) {
        // A single distinct value: alpha runs to the upper bound.
        const AlphaFit af = fit_alpha_tail(s.suffix_n[0], s.suffix_log[0], s.values[0]);
        best = PowerLawFit{af.alpha, s.values[0], ks_tail(s, 0, s.values[0], af.alpha), -1.0, af.n_tail, true};
    }
    return *best;
}

PowerLawSampler::PowerLawSampler(double alpha, std::int64_t xmin)
    : alpha_(alpha), xmin_(xmin), norm_(hurwitz_zeta(alpha, static_cast<double>(xmin))) {
    if (xmin < 1) throw FitError("xmin must be at least 1");
    table_.resize(kSamplerTable + 1);
    table_[kSamplerTable] = ccdf(xmin + static_cast<std::int64_t>(kSamplerTable));
    for (std::size_t k = kSamplerTable; k-- > 0;) {
        const double x = static_cast<double>(xmin + static_cast<std::int64_t>(k));
        table_[k] = table_[k + 1] + std::pow(x, -alpha) / norm_;
    }
}

double PowerLawSampler::ccdf(std::int64_t x) const {
    return hurwitz_zeta(alpha_, static_cast<double>(x)) / norm_;
}

std::int64_t PowerLawSampler::operator()(std::mt19937_64& rng) const {
    // u in (0, 1]; the draw is the largest x with P(X >= x) >= u.
    const double u = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u > table_.back()) {
        // table_ is non-increasing: find the last entry >= u.
        const auto it = std::upper_bound(table_.begin(), table_.end(), u, std::greater<double>());
        const auto k = static_cast<std::int64_t>(it - table_.begin());
        return xmin_ + std::max<std::int64_t>(k - 1, 0);
    }
    std::int64_t lo = xmin_ + static_cast<std::int64_t>(kSamplerTable);
    std::int64_t hi = lo;
    while (ccdf(hi) >= u) {
        lo = hi;
        if (hi >= kSampleCap / 2) return kSampleCap;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        (ccdf(mid) >= u ? lo : hi) = mid;
    }
    return lo;
}

double goodness_of_fit(std::span<const std::int64_t> counts, const PowerLawFit& fitted,
                       int iterations, std::uint64_t seed, int min_tail, int threads) {
    if (iterations < 1) throw FitError("bootstrap needs at least one iteration");
    std::vector<std::int64_t> head;
    for (std::int64_t x : counts) {
        if (x < fitted.xmin) head.push_back(x);
    }
    const std::size_t n = counts.size();
    const double p_tail = n == 0 ? 1.0 : static_cast<double>(n - head.size()) / static_cast<double>(n);
    const PowerLawSampler sampler(fitted.alpha, fitted.xmin);

    std::vector<char> at_least(static_cast<std::size_t>(iterations), 0);
    auto run = [&](int i) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<std::int64_t> synthetic(n);
        for (auto& x : synthetic) {
            if (head.empty() || unit(rng) < p_tail) {
                x = sampler(rng);
            } else {
                x = head[std::uniform_int_distribution<std::size_t>(0, head.size() - 1)(rng)];
            }
        }
        bool ge = true;
        try {
            ge = fit(synthetic, min_tail).ks_stat >= fitted.ks_stat;
        } catch (const FitError&) {
            // An unfittable synthetic set counts against the model.
        }
        at_least[static_cast<std::size_t>(i)] = ge ? 1 : 0;
    };

    const int workers = std::clamp(threads, 1, iterations);
    if (workers == 1) {
        for (int i = 0; i < iterations; ++i) run(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int i = w; i < iterations; i += workers) run(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    const auto hits = std::count(at_least.begin(), at_least.end(), 1);
    return static_cast<double>(hits) / iterations;
}

CountSample keyword_counts(const EventCandidate& candidate,
                           const std::vector<std::string>& excluded) {
    std::map<std::string, std::int64_t> freq;
    for (const auto& t : candidate.tweets) {
        for (auto& k : extract_keywords(t.text)) {
            if (std::find(excluded.begin(), excluded.end(), k) != excluded.end()) continue;
            ++freq[std::move(k)];
        }
    }
    CountSample out;
    out.reserve(freq.size());
    for (const auto& [k, c] : freq) out.push_back(c);
    return out;
}

PowerLawDecision passes_powerlaw(const EventCandidate& candidate, const DetectorConfig& config,
                                 std::uint64_t seed) {
    PowerLawDecision out;
    const CountSample counts = keyword_counts(candidate, config.region_names);
    if (counts.size() < static_cast<std::size_t>(config.powerlaw_min_tail)) {
        out.reason = "too few keywords (" + std::to_string(counts.size()) + ")";
        return out;
    }
    try {
        PowerLawFit f = fit(counts, config.powerlaw_min_tail);
        if (f.degenerate) {
            out.reason = "degenerate fit";
            out.fit = f;
            return out;
        }
        f.p_value = goodness_of_fit(counts, f, config.bootstrap_iterations, seed,
                                    config.powerlaw_min_tail);
        out.fit = f;
        out.passes = f.p_value >= config.powerlaw_pvalue_threshold;
        if (!out.passes) out.reason = "p-value below threshold";
    } catch (const FitError& e) {
        out.reason = e.what();
    }
    return out;
}

}  // namespace geoevent
