#pragma once

#include "voi/decision.hpp"

namespace voi::vent {

// Office ventilation scheduling: pick an air-change rate for the day,
// trading fan electricity against the expected productivity loss from
// airborne infections, under uncertain occupancy (discrete uniform on
// 0..max_occupancy).
//
// The infection side is a steady-state Wells-Riley model with exact
// binomial marginalisation over the number of infectious occupants.
// quanta_rate and breathing_rate are calibration inputs, not measured
// truths; the defaults were chosen so that 5 ACH is the prior-optimal
// setting for the default office.
struct VentilationParams {
    double floor_area_m2 = 500.0;
    double ceiling_height_m = 4.0;
    int max_occupancy = 55;
    std::vector<double> ach_options{1.0, 3.0, 5.0, 10.0};
    double fan_specific_power_w_per_lps = 1.9;
    double fan_efficiency = 0.60;
    double fan_hours_per_day = 10.0;
    double electricity_price_per_kwh = 0.34;
    double prevalence = 0.0218;
    double sick_days_per_infection = 3.0;
    double daily_salary_loss = 128.0;
    double exposure_hours_per_day = 8.0;
    double quanta_rate_per_hour = 14.0;
    double breathing_rate_m3_per_hour = 0.6;

    double room_volume_m3() const { return floor_area_m2 * ceiling_height_m; }
    void validate() const;
};

// Fan electricity cost of running `ach` air changes per hour, GBP/day.
double ventilation_energy_cost(double ach, const VentilationParams& params);

// Expected number of new infections per day given the occupancy level,
// marginalised exactly over Binomial(occupancy, prevalence) infectors.
double expected_new_infections(int occupancy, double ach, const VentilationParams& params);

// Total daily cost: fan electricity plus expected productivity loss.
double ventilation_daily_cost(double ach, int occupancy, const VentilationParams& params);

DecisionProblem<int> build_ventilation_problem(const VentilationParams& params);

}  // namespace voi::vent
