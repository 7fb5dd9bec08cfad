#include <doctest.h>

#include <cmath>

#include "voi/ashp.hpp"
#include "voi/rng.hpp"
#include "voi/solve.hpp"

using namespace voi;
using namespace voi::ashp;

namespace {

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

// Closed-form mean of a Normal(mu, sigma) truncated to [lo, hi].
double truncated_normal_mean(double mu, double sigma, double lo, double hi) {
    const double a = (lo - mu) / sigma;
    const double b = (hi - mu) / sigma;
    const double z = normal_cdf(b) - normal_cdf(a);
    return mu + sigma * (normal_pdf(a) - normal_pdf(b)) / z;
}

}  // namespace

TEST_CASE("maintenance uplift follows the saturating curve") {
    const AshpParams p;
    CHECK(maintenance_uplift(0, p) == 0.0);
    // Direct evaluation: 2^1.4 = 2.6390158..., beta = 0.05*x/(2.5+x).
    CHECK(maintenance_uplift(2, p) == doctest::Approx(0.0256763).epsilon(1e-5));
    const double direct = 0.05 * std::pow(2.0, 1.4) / (2.5 + std::pow(2.0, 1.4));
    CHECK(maintenance_uplift(2, p) == doctest::Approx(direct).epsilon(1e-14));

    double previous = 0.0;
    for (int n = 1; n <= p.n_max; ++n) {
        const double beta = maintenance_uplift(n, p);
        CHECK(beta > previous);      // strictly increasing
        CHECK(beta < p.beta_a);      // bounded by the asymptote
        previous = beta;
    }
    CHECK_THROWS_AS(maintenance_uplift(-1, p), std::invalid_argument);
    CHECK_THROWS_AS(maintenance_uplift(13, p), std::invalid_argument);
}

TEST_CASE("seasonal performance factor") {
    const AshpParams p;
    CHECK(seasonal_performance(0.0, 0, p) == 3.0);
    CHECK(seasonal_performance(0.5, 0, p) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(seasonal_performance(0.1, 2, p) == doctest::Approx(2.7693).epsilon(1e-4));
    CHECK(seasonal_performance(0.1, 2, p) ==
          doctest::Approx(3.0 * 0.9 * (1.0 + maintenance_uplift(2, p))).epsilon(1e-15));
    CHECK_THROWS_AS(seasonal_performance(1.0, 0, p), std::invalid_argument);
    CHECK_THROWS_AS(seasonal_performance(-0.1, 0, p), std::invalid_argument);
}

TEST_CASE("annual cost") {
    const AshpParams p;
    CHECK(annual_cost(0, 0.0, p) == doctest::Approx(0.34 * 1.75e6 / 3.0).epsilon(1e-12));
    // Twelve activities: energy below the no-maintenance baseline,
    // maintenance exactly 12 * 2210.
    const double energy12 = annual_cost(12, 0.0, p) - 12.0 * 2210.0;
    CHECK(energy12 < 0.34 * 1.75e6 / 3.0);
    CHECK(annual_cost(12, 0.0, p) - energy12 == doctest::Approx(26520.0));
    // Fixed n: strictly increasing in alpha.
    for (int n : {0, 2, 7}) {
        double previous = annual_cost(n, 0.0, p);
        for (double alpha : {0.1, 0.2, 0.3, 0.5, 0.7, 0.9}) {
            const double cost = annual_cost(n, alpha, p);
            CHECK(cost > previous);
            previous = cost;
        }
    }
}

TEST_CASE("per-alpha optimal maintenance count is non-decreasing in alpha") {
    const AshpParams p;
    int previous_best = 0;
    for (double alpha = 0.0; alpha < 0.95; alpha += 0.1) {
        int best = 0;
        double best_cost = annual_cost(0, alpha, p);
        for (int n = 1; n <= p.n_max; ++n) {
            const double cost = annual_cost(n, alpha, p);
            if (cost < best_cost) {
                best_cost = cost;
                best = n;
            }
        }
        CHECK(best >= previous_best);
        previous_best = best;
    }
}

TEST_CASE("degradation sampler matches the truncated-normal law") {
    const AshpParams p;
    const std::uint64_t n = 1'000'000;

    SUBCASE("all draws lie inside [0, alpha_cap]") {
        for (std::uint64_t i = 0; i < 20000; ++i) {
            const double a = sample_alpha(3, i, p);
            CHECK(a >= 0.0);
            CHECK(a <= p.alpha_cap);
        }
    }
    SUBCASE("empirical mean matches the closed form") {
        double sum = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            sum += sample_alpha(1, i, p);
        }
        const double mean = sum / static_cast<double>(n);
        const double expected =
            truncated_normal_mean(p.alpha_mu, p.alpha_sigma, 0.0, p.alpha_cap);
        CHECK(expected == doctest::Approx(0.204).epsilon(0.01));
        CHECK(mean == doctest::Approx(expected).epsilon(0.004));  // ~0.20 +/- small
    }
    SUBCASE("fraction of raw draws rejected below zero matches the normal CDF") {
        // Replicates the rejection loop with the same primitive draws.
        std::uint64_t raw = 0;
        std::uint64_t below = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            StreamRng rng = sample_index_rng(1, i);
            for (;;) {
                const double draw = p.alpha_mu + p.alpha_sigma * rng.normal();
                ++raw;
                below += draw < 0.0;
                if (draw >= 0.0 && draw <= p.alpha_cap) {
                    break;
                }
            }
        }
        const double fraction = static_cast<double>(below) / static_cast<double>(raw);
        const double expected = normal_cdf((0.0 - p.alpha_mu) / p.alpha_sigma);
        CHECK(expected == doctest::Approx(0.484).epsilon(0.001));
        CHECK(fraction == doctest::Approx(expected).epsilon(0.005));  // +/- 0.002 absolute
    }
    SUBCASE("zero variance collapses to the mean") {
        AshpParams degenerate = p;
        degenerate.alpha_sigma = 0.0;
        CHECK(sample_alpha(0, 0, degenerate) == degenerate.alpha_mu);
        CHECK(sample_alpha(5, 99, degenerate) == degenerate.alpha_mu);
    }
}

TEST_CASE("ashp decision problem") {
    const AshpParams p;
    const DecisionProblem<double> problem = build_ashp_problem(p);
    REQUIRE(problem.actions.size() == 13);
    CHECK(problem.actions.front() == "0");
    CHECK(problem.actions.back() == "12");
    CHECK(problem.sense == Sense::minimize);

    SUBCASE("problem utility equals annual_cost") {
        for (int n : {0, 2, 12}) {
            for (double alpha : {0.0, 0.2, 0.9}) {
                CHECK(problem.utility(static_cast<std::size_t>(n), alpha) ==
                      annual_cost(n, alpha, p));
            }
        }
    }
    SUBCASE("prior optimum at a moderate budget is two activities per year") {
        const PriorSolution prior = solve_prior(problem, 200000, 0);
        CHECK(prior.prior_action == "2");
    }
    SUBCASE("vanishing degradation uncertainty kills the value of information") {
        AshpParams certain = p;
        certain.alpha_sigma = 0.0;
        const VoiEstimate e = solve_voi(build_ashp_problem(certain), 1000, 7);
        CHECK(e.evpi == 0.0);
    }
}

TEST_CASE("ashp parameter validation") {
    AshpParams p;
    p.alpha_cap = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = AshpParams{};
    p.base_spf = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = AshpParams{};
    p.heating_load_kwh_per_year = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
