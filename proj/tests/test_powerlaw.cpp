#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "geoevent/powerlaw.hpp"

using namespace geoevent;

namespace {

// Slow reference: a million terms plus the integral tail with a half-term
// correction.
double zeta_reference(double s, double q) {
    constexpr int kTerms = 1'000'000;
    double sum = 0.0;
    for (int k = kTerms - 1; k >= 0; --k) sum += std::pow(q + k, -s);
    const double tail_start = q + kTerms;
    return sum + std::pow(tail_start, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(tail_start, -s);
}

double ll_reference(const CountSample& c, std::int64_t xmin, double alpha) {
    const double z = zeta_reference(alpha, static_cast<double>(xmin));
    double ll = 0.0;
    for (auto x : c) {
        if (x >= xmin) ll += -alpha * std::log(static_cast<double>(x)) - std::log(z);
    }
    return ll;
}

// Independent sampler: cumulative pmf walk over a reference normalisation,
// continuous Pareto approximation beyond the walk limit.
class NaiveSampler {
public:
    NaiveSampler(double alpha, std::int64_t xmin) : alpha_(alpha), xmin_(xmin) {
        const double z = zeta_reference(alpha, static_cast<double>(xmin));
        double acc = 0.0;
        for (std::int64_t x = xmin; x < xmin + kWalk; ++x) {
            acc += std::pow(static_cast<double>(x), -alpha) / z;
            cdf_.push_back(acc);
        }
    }
    std::int64_t operator()(std::mt19937_64& rng) const {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it != cdf_.end()) return xmin_ + (it - cdf_.begin());
        const double rest = 1.0 - cdf_.back();
        const double over = (1.0 - u) / rest;
        const double x0 = static_cast<double>(xmin_ + kWalk);
        return static_cast<std::int64_t>(x0 * std::pow(over, -1.0 / (alpha_ - 1.0)));
    }

private:
    static constexpr std::int64_t kWalk = 200'000;
    double alpha_;
    std::int64_t xmin_;
    std::vector<double> cdf_;
};

// Brute-force KS over every integer of the tail support.
double ks_reference(const CountSample& c, std::int64_t xmin, double alpha) {
    std::vector<std::int64_t> tail;
    for (auto x : c) {
        if (x >= xmin) tail.push_back(x);
    }
    std::sort(tail.begin(), tail.end());
    const double z = zeta_reference(alpha, static_cast<double>(xmin));
    double model = 0.0, worst = 0.0;
    std::size_t below = 0;
    for (std::int64_t x = xmin; x <= tail.back(); ++x) {
        model += std::pow(static_cast<double>(x), -alpha) / z;
        while (below < tail.size() && tail[below] <= x) ++below;
        worst = std::max(worst, std::abs(static_cast<double>(below) / tail.size() - model));
    }
    return worst;
}

CountSample draw(const NaiveSampler& s, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    CountSample out;
    for (int i = 0; i < n; ++i) out.push_back(s(rng));
    return out;
}

EventCandidate candidate_with(const std::vector<std::string>& texts) {
    EventCandidate c;
    int i = 0;
    for (const auto& text : texts) {
        Tweet t;
        t.id = std::to_string(i++);
        t.text = text;
        c.tweets.push_back(t);
    }
    return c;
}

}  // namespace

TEST_CASE("Hurwitz zeta against a direct sum") {
    for (double s : {1.01, 1.5, 2.0, 2.5, 3.0, 6.0}) {
        for (double q : {1.0, 2.0, 3.5, 10.0, 57.0}) {
            const double ref = zeta_reference(s, q);
            CHECK(hurwitz_zeta(s, q) == doctest::Approx(ref).epsilon(s < 1.1 ? 1e-6 : 1e-9));
        }
    }
    CHECK(hurwitz_zeta(2.0, 1.0) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-12));
    CHECK_THROWS_AS(hurwitz_zeta(1.0, 1.0), FitError);
}

TEST_CASE("log-likelihood matches the reference") {
    const CountSample c{1, 1, 2, 3, 5, 8, 13};
    for (std::int64_t xmin : {1, 2, 3}) {
        for (double a : {1.5, 2.2, 3.7}) {
            CHECK(log_likelihood(c, xmin, a) == doctest::Approx(ll_reference(c, xmin, a)).epsilon(1e-8));
        }
    }
}

TEST_CASE("fit_alpha agrees with a grid search on small samples") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = std::uniform_int_distribution<int>(2, 8)(rng);
        CountSample c;
        for (int i = 0; i < n; ++i) c.push_back(std::uniform_int_distribution<int>(1, 5)(rng));
        if (std::all_of(c.begin(), c.end(), [&](auto x) { return x == c[0]; })) continue;
        const AlphaFit f = fit_alpha(c, 1);
        double best = -1e300, best_a = 0.0;
        for (double a = 1.01; a <= 6.0 + 1e-9; a += 0.01) {
            const double ll = ll_reference(c, 1, a);
            if (ll > best) {
                best = ll;
                best_a = a;
            }
        }
        CHECK(std::abs(f.alpha - best_a) <= 0.01 + 1e-9);
    }
}

TEST_CASE("all-equal counts hit the boundary") {
    const CountSample c(20, 3);
    const AlphaFit f = fit_alpha(c, 1);
    CHECK(f.at_boundary);
    const PowerLawFit pf = fit(c);
    CHECK(pf.degenerate);
}

TEST_CASE("ks_statistic equals a brute-force maximum") {
    std::mt19937_64 rng(32);
    const NaiveSampler s(2.2, 1);
    for (int trial = 0; trial < 20; ++trial) {
        CountSample c;
        for (int i = 0; i < 200; ++i) c.push_back(std::min<std::int64_t>(s(rng), 5000));
        for (std::int64_t xmin : {1, 2, 4}) {
            for (double a : {1.8, 2.2, 2.9}) {
                CHECK(ks_statistic(c, xmin, a) == doctest::Approx(ks_reference(c, xmin, a)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("sampler matches the exact pmf") {
    for (double alpha : {2.0, 2.5, 3.0}) {
        const PowerLawSampler sampler(alpha, 2);
        std::mt19937_64 rng(33);
        std::map<std::int64_t, int> freq;
        constexpr int kDraws = 40000;
        for (int i = 0; i < kDraws; ++i) {
            const auto x = sampler(rng);
            REQUIRE(x >= 2);
            ++freq[x];
        }
        const double z = zeta_reference(alpha, 2.0);
        for (std::int64_t x = 2; x < 8; ++x) {
            const double p = std::pow(static_cast<double>(x), -alpha) / z;
            const double sd = std::sqrt(p * (1 - p) / kDraws);
            CHECK(std::abs(freq[x] / double(kDraws) - p) < 5 * sd);
        }
    }
}

TEST_CASE("recovery from an independent sampler, n = 10000") {
    for (double alpha : {2.0, 2.5, 3.0}) {
        const CountSample c = draw(NaiveSampler(alpha, 1), 10000, 34);
        const PowerLawFit f = fit(c);
        CHECK(std::abs(f.alpha - alpha) <= 0.1);
        CHECK(f.xmin <= 3);
        CHECK_FALSE(f.degenerate);
    }
}

TEST_CASE("exponential head below xmin = 5") {
    std::mt19937_64 rng(35);
    const NaiveSampler tail(2.5, 5);
    std::geometric_distribution<int> head(0.5);
    int within = 0;
    for (int trial = 0; trial < 5; ++trial) {
        CountSample c;
        for (int i = 0; i < 4000; ++i) c.push_back(1 + std::min(head(rng), 3));
        for (int i = 0; i < 6000; ++i) c.push_back(tail(rng));
        const PowerLawFit f = fit(c);
        if (std::abs(f.xmin - 5) <= 2) ++within;
    }
    CHECK(within == 5);
}

TEST_CASE("too few observations") {
    CHECK_THROWS_AS(fit(CountSample{1, 2, 3, 4, 5}), FitError);
    CHECK_THROWS_AS(fit_alpha(CountSample{1, 2}, 3), FitError);
    CHECK_THROWS_AS(fit(CountSample{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), FitError);
}

TEST_CASE("duplicating every observation leaves alpha unchanged") {
    const CountSample c = draw(NaiveSampler(2.3, 1), 500, 36);
    CountSample twice = c;
    twice.insert(twice.end(), c.begin(), c.end());
    const PowerLawFit a = fit(c), b = fit(twice);
    CHECK(a.xmin == b.xmin);
    CHECK(a.alpha == doctest::Approx(b.alpha).epsilon(1e-5));
    CHECK(a.ks_stat == doctest::Approx(b.ks_stat).epsilon(1e-9));
}

TEST_CASE("goodness of fit: determinism, thread invariance, single iteration") {
    const CountSample c = draw(NaiveSampler(2.5, 1), 400, 37);
    const PowerLawFit f = fit(c);
    const double p1 = goodness_of_fit(c, f, 40, 9);
    CHECK(p1 == goodness_of_fit(c, f, 40, 9));
    CHECK(p1 == goodness_of_fit(c, f, 40, 9, 10, 3));
    const double single = goodness_of_fit(c, f, 1, 4);
    CHECK((single == 0.0 || single == 1.0));
    CHECK_THROWS_AS(goodness_of_fit(c, f, 0, 4), FitError);
}

TEST_CASE("power-law samples mostly pass the bootstrap") {
    int pass = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const CountSample c = draw(NaiveSampler(2.5, 1), 1000, 100 + rep);
        const PowerLawFit f = fit(c);
        if (goodness_of_fit(c, f, 50, rep) > 0.1) ++pass;
    }
    CHECK(pass >= 16);
}

TEST_CASE("keyword counts and the candidate decision") {
    DetectorConfig config;
    SUBCASE("every keyword once fails") {
        std::vector<std::string> texts;
        for (int i = 0; i < 30; ++i) texts.push_back("#tag" + std::to_string(i));
        const auto d = passes_powerlaw(candidate_with(texts), config, 1);
        CHECK_FALSE(d.passes);
    }
    SUBCASE("no keywords fails") {
        const auto d = passes_powerlaw(candidate_with({"nothing here", "just words"}), config, 1);
        CHECK_FALSE(d.passes);
        CHECK_FALSE(d.fit);
    }
    SUBCASE("region names are excluded") {
        const auto c = candidate_with({"#nyc #fire", "#NYC Fire", "#fire"});
        auto counts = keyword_counts(c, config.region_names);
        std::sort(counts.begin(), counts.end());
        CHECK(counts == CountSample{3});
    }
    SUBCASE("Zipf-like keyword counts pass") {
        // Word k (rank k) appears about 200 / k^1.1 times.
        std::vector<std::string> texts;
        std::mt19937_64 rng(38);
        std::vector<double> w;
        for (int k = 1; k <= 200; ++k) w.push_back(std::pow(k, -1.1));
        std::discrete_distribution<int> zipf(w.begin(), w.end());
        for (int i = 0; i < 400; ++i) texts.push_back("#w" + std::to_string(zipf(rng)));
        const auto d = passes_powerlaw(candidate_with(texts), config, 5);
        REQUIRE(d.fit);
        CHECK(d.passes);
    }
}
