#include "voi/ventilation.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "voi/rng.hpp"

namespace voi::vent {

void VentilationParams::validate() const {
    if (floor_area_m2 <= 0.0 || ceiling_height_m <= 0.0) {
        throw std::invalid_argument("ventilation: room dimensions must be positive");
    }
    if (max_occupancy < 0) {
        throw std::invalid_argument("ventilation: max_occupancy must be non-negative");
    }
    if (ach_options.empty()) {
        throw std::invalid_argument("ventilation: ach_options must be non-empty");
    }
    for (double ach : ach_options) {
        if (ach <= 0.0) {
            throw std::invalid_argument("ventilation: ach options must be positive");
        }
    }
    if (fan_specific_power_w_per_lps <= 0.0 || fan_hours_per_day <= 0.0 ||
        electricity_price_per_kwh <= 0.0 || sick_days_per_infection <= 0.0 ||
        daily_salary_loss <= 0.0 || exposure_hours_per_day <= 0.0 ||
        quanta_rate_per_hour <= 0.0 || breathing_rate_m3_per_hour <= 0.0) {
        throw std::invalid_argument("ventilation: physical quantities must be positive");
    }
    if (!(fan_efficiency > 0.0 && fan_efficiency <= 1.0)) {
        throw std::invalid_argument("ventilation: fan_efficiency must lie in (0, 1]");
    }
    if (!(prevalence >= 0.0 && prevalence <= 1.0)) {
        throw std::invalid_argument("ventilation: prevalence must lie in [0, 1]");
    }
}

double ventilation_energy_cost(double ach, const VentilationParams& params) {
    if (ach < 0.0) {
        throw std::invalid_argument("ventilation_energy_cost: ach must be non-negative");
    }
    // ach * V m3/h -> l/s; fan power in W scaled by efficiency; kWh/day.
    const double flow_lps = ach * params.room_volume_m3() * (1000.0 / 3600.0);
    const double fan_kw = params.fan_specific_power_w_per_lps * flow_lps / params.fan_efficiency / 1000.0;
    return params.electricity_price_per_kwh * params.fan_hours_per_day * fan_kw;
}

double expected_new_infections(int occupancy, double ach, const VentilationParams& params) {
    if (occupancy < 0 || occupancy > params.max_occupancy) {
        std::ostringstream oss;
        oss << "expected_new_infections: occupancy " << occupancy << " outside 0.."
            << params.max_occupancy;
        throw std::invalid_argument(oss.str());
    }
    if (occupancy <= 1) {
        return 0.0;
    }
    const double p = params.prevalence;
    if (p <= 0.0 || p >= 1.0) {
        // No infectors, or no susceptibles left to infect.
        return 0.0;
    }
    // Quanta inhaled by one susceptible over the exposure window, per
    // infectious occupant, at steady-state concentration.
    const double dose_per_infector = params.quanta_rate_per_hour * params.breathing_rate_m3_per_hour *
                                     params.exposure_hours_per_day /
                                     (ach * params.room_volume_m3());
    // P(I infectors) via the binomial recurrence; susceptibles = occ - I.
    double pmf = std::pow(1.0 - p, occupancy);  // I = 0
    double expected = 0.0;
    for (int i = 1; i <= occupancy; ++i) {
        pmf *= (static_cast<double>(occupancy - i + 1) / static_cast<double>(i)) * (p / (1.0 - p));
        const double risk = 1.0 - std::exp(-dose_per_infector * static_cast<double>(i));
        expected += pmf * static_cast<double>(occupancy - i) * risk;
    }
    return expected;
}

double ventilation_daily_cost(double ach, int occupancy, const VentilationParams& params) {
    return ventilation_energy_cost(ach, params) +
           expected_new_infections(occupancy, ach, params) * params.sick_days_per_infection *
               params.daily_salary_loss;
}

DecisionProblem<int> build_ventilation_problem(const VentilationParams& params) {
    params.validate();
    // Occupancy support is finite, so the whole cost table is computed
    // once up front; utility lookups are then just indexing.
    auto table = std::make_shared<std::vector<std::vector<double>>>();
    table->reserve(params.ach_options.size());
    for (double ach : params.ach_options) {
        std::vector<double> row(static_cast<std::size_t>(params.max_occupancy) + 1);
        for (int occ = 0; occ <= params.max_occupancy; ++occ) {
            row[static_cast<std::size_t>(occ)] = ventilation_daily_cost(ach, occ, params);
        }
        table->push_back(std::move(row));
    }

    DecisionProblem<int> problem;
    for (double ach : params.ach_options) {
        std::ostringstream label;
        label << ach;
        problem.actions.push_back(label.str());
    }
    const auto support = static_cast<std::uint64_t>(params.max_occupancy) + 1;
    problem.sampler = [support](std::uint64_t seed, std::uint64_t index) -> int {
        return static_cast<int>(sample_index_rng(seed, index).uniform_below(support));
    };
    problem.utility = [table](std::size_t action, const int& occupancy) {
        return (*table)[action][static_cast<std::size_t>(occupancy)];
    };
    problem.sense = Sense::minimize;
    return problem;
}

}  // namespace voi::vent
