#include "voi/ashp.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "voi/rng.hpp"

namespace voi::ashp {

void AshpParams::validate() const {
    if (heating_load_kwh_per_year <= 0.0 || beta_a <= 0.0 || beta_b <= 0.0 || gamma <= 0.0 ||
        maintenance_cost_per_activity <= 0.0 || electricity_price_per_kwh <= 0.0 ||
        alpha_mu <= 0.0 || alpha_sigma < 0.0) {
        throw std::invalid_argument("ashp: parameters must be positive");
    }
    if (base_spf <= 1.0) {
        throw std::invalid_argument("ashp: base_spf must exceed 1");
    }
    if (!(alpha_cap > 0.0 && alpha_cap < 1.0)) {
        throw std::invalid_argument("ashp: alpha_cap must lie in (0, 1)");
    }
    if (n_max < 0) {
        throw std::invalid_argument("ashp: n_max must be non-negative");
    }
}

double maintenance_uplift(int n_m, const AshpParams& params) {
    if (n_m < 0 || n_m > params.n_max) {
        throw std::invalid_argument("maintenance_uplift: n_m outside 0.." +
                                    std::to_string(params.n_max));
    }
    if (n_m == 0) {
        return 0.0;
    }
    const double ng = std::pow(static_cast<double>(n_m), params.gamma);
    return params.beta_a * ng / (params.beta_b + ng);
}

double seasonal_performance(double alpha, int n_m, const AshpParams& params) {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("seasonal_performance: alpha must lie in [0, 1)");
    }
    return params.base_spf * (1.0 - alpha) * (1.0 + maintenance_uplift(n_m, params));
}

double annual_cost(int n_m, double alpha, const AshpParams& params) {
    const double spf = seasonal_performance(alpha, n_m, params);
    return params.electricity_price_per_kwh * params.heating_load_kwh_per_year / spf +
           params.maintenance_cost_per_activity * static_cast<double>(n_m);
}

double sample_alpha(std::uint64_t seed, std::uint64_t index, const AshpParams& params) {
    if (params.alpha_sigma == 0.0) {
        if (params.alpha_mu > params.alpha_cap) {
            throw NumericalError("sample_alpha: degenerate prior lies outside [0, alpha_cap]");
        }
        return params.alpha_mu;
    }
    StreamRng rng = sample_index_rng(seed, index);
    for (;;) {
        const double draw = params.alpha_mu + params.alpha_sigma * rng.normal();
        if (draw >= 0.0 && draw <= params.alpha_cap) {
            return draw;
        }
    }
}

DecisionProblem<double> build_ashp_problem(const AshpParams& params) {
    params.validate();
    // Per-action uplift cached; the per-sample arithmetic is then
    // identical to annual_cost with the same beta.
    auto uplift = std::make_shared<std::vector<double>>();
    for (int n = 0; n <= params.n_max; ++n) {
        uplift->push_back(maintenance_uplift(n, params));
    }

    DecisionProblem<double> problem;
    for (int n = 0; n <= params.n_max; ++n) {
        problem.actions.push_back(std::to_string(n));
    }
    problem.sampler = [params](std::uint64_t seed, std::uint64_t index) {
        return sample_alpha(seed, index, params);
    };
    problem.utility = [params, uplift](std::size_t action, const double& alpha) {
        const double spf = params.base_spf * (1.0 - alpha) * (1.0 + (*uplift)[action]);
        return params.electricity_price_per_kwh * params.heating_load_kwh_per_year / spf +
               params.maintenance_cost_per_activity * static_cast<double>(action);
    };
    problem.sense = Sense::minimize;
    return problem;
}

}  // namespace voi::ashp
