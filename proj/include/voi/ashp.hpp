#pragma once

#include <cstdint>

#include "voi/decision.hpp"

namespace voi::ashp {

// Air-source heat-pump maintenance scheduling: pick the number of
// maintenance activities per year (0..n_max) to minimise electricity
// plus maintenance cost, under an uncertain performance degradation
// factor alpha.
//
// alpha is a Normal(alpha_mu, alpha_sigma) truncated by rejection to
// [0, alpha_cap].  The cap exists because expected electricity cost
// scales with E[1/(1-alpha)], which is infinite whenever the density
// reaches alpha = 1; capping keeps the expectation finite and the
// Monte Carlo estimate stable.
struct AshpParams {
    double heating_load_kwh_per_year = 1.75e6;
    double base_spf = 3.0;
    double beta_a = 0.05;
    double beta_b = 2.5;
    double gamma = 1.4;
    double maintenance_cost_per_activity = 2210.0;
    double electricity_price_per_kwh = 0.34;
    double alpha_mu = 0.01;
    double alpha_sigma = 0.25;
    double alpha_cap = 0.95;
    int n_max = 12;

    void validate() const;
};

// Maintenance SPF uplift: beta = beta_a * n^gamma / (beta_b + n^gamma).
double maintenance_uplift(int n_m, const AshpParams& params);

// Seasonal performance factor: base_spf * (1 - alpha) * (1 + beta).
double seasonal_performance(double alpha, int n_m, const AshpParams& params);

// Annual cost: electricity for the heating load at the degraded SPF
// plus maintenance.
double annual_cost(int n_m, double alpha, const AshpParams& params);

// Truncated-normal degradation draw for one (seed, sample index) pair.
double sample_alpha(std::uint64_t seed, std::uint64_t index, const AshpParams& params);

DecisionProblem<double> build_ashp_problem(const AshpParams& params);

}  // namespace voi::ashp
