#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "voi/decision.hpp"

namespace voi::gshp {

// Shape controls for the synthetic heating-demand year.  The profile is
// a seasonal cosine (peaking around `peak_day`) modulated by a fixed
// diurnal pattern, then mapped affinely so the annual energy and peak
// power targets hold exactly.  seasonal_weight and diurnal_amplitude
// are calibration inputs: zero for both degenerates to a flat profile,
// which cannot satisfy a peak above the mean and is rejected.
struct LoadProfileParams {
    double annual_kwh = 116000.0;
    double peak_kw = 25.2;
    double peak_day = 14.5;          // mid-January
    double seasonal_weight = 0.85;   // 0 = flat year, 1 = fully seasonal
    double diurnal_amplitude = 1.0;  // 0 = flat day
};

// One representative year of hourly heating demand, kW per hour.
struct HourlyLoadProfile {
    std::vector<double> values_kw;

    double annual_kwh() const;
    double peak_kw() const;
    double mean_kw() const;
};

HourlyLoadProfile synthesize_load(const LoadProfileParams& params);

// Reads an 8760-row CSV with header `kw`.  Values must be finite and
// non-negative; deviations from the default annual/peak targets are
// reported as warnings rather than errors.
HourlyLoadProfile load_profile_from_csv(const std::string& path,
                                        std::vector<std::string>* warnings = nullptr);

// Borehole design problem: choose the per-borehole length to minimise
// capital plus lifetime electricity cost under uncertain ground
// conductivity lambda ~ Normal(lambda_mu, lambda_sigma), clipped below
// at lambda_floor.
//
// The ground is modelled as an infinite line source per borehole with
// hourly temporal superposition and no borehole-to-borehole
// interaction at sub-annual time scales.  The representative year is
// simulated after a spin-up year, on top of an analytic pre-history
// term: the steady annual-mean extraction sustained over the preceding
// lifetime, which is what makes long-lived systems with short boreholes
// genuinely expensive to run.  borehole_radius and the load shape are
// calibration inputs documented as such.
struct GshpParams {
    std::vector<double> lengths_m;   // default 140..200 step 5
    int n_boreholes = 9;
    double drilling_cost_per_m = 70.0;
    double lifetime_years = 50.0;
    double electricity_price_per_kwh = 0.34;
    double lambda_mu = 2.0;
    double lambda_sigma = 0.12;
    double lambda_floor = 0.5;
    double fluid_min_c = 5.0;
    double fluid_max_c = 35.0;
    double ground_temp_c = 12.0;
    double volumetric_heat_capacity_mj_per_m3k = 2.3;
    double borehole_resistance_mk_per_w = 0.10;
    double borehole_radius_m = 0.05;
    double cop_intercept = 4.0279;
    double cop_slope_per_c = 0.1319;
    double aux_cop = 1.0;
    LoadProfileParams load;

    GshpParams();
    void validate() const;
};

// Hourly series for the representative year (8760 entries each).
struct DispatchResult {
    std::vector<double> ground_extraction_kwh;  // E_g
    std::vector<double> gshp_heat_kwh;          // E_GSHP
    std::vector<double> aux_heat_kwh;           // E_aux
    std::vector<double> fluid_temp_c;           // T_fluid
    std::vector<double> cop;

    double electricity_kwh(double aux_cop) const;
    double total_aux_kwh() const;
};

// Simulates the representative year at hourly resolution: at each hour
// the ground supplies as much of the load as it can while keeping
// T_fluid >= fluid_min; any shortfall goes to the auxiliary system.
DispatchResult dispatch(const HourlyLoadProfile& load, double lambda, double length_m,
                        const GshpParams& params);

// Capital (drilling) plus lifetime electricity cost, GBP.
double lifetime_cost(double lambda, double length_m, const GshpParams& params);

// Lifetime cost precomputed on lengths x a uniform lambda grid, with
// linear interpolation in lambda.  Queries outside the grid clamp to
// the nearest edge (the grid spans lambda_mu +/- 6 sigma, so that is a
// > 6-sigma event).
class CostSurface {
public:
    CostSurface(std::vector<double> lambda_grid, std::vector<std::vector<double>> costs);

    double interpolate(std::size_t length_index, double lambda) const;
    const std::vector<double>& lambda_grid() const { return lambda_grid_; }
    const std::vector<std::vector<double>>& costs() const { return costs_; }

private:
    std::vector<double> lambda_grid_;
    std::vector<std::vector<double>> costs_;  // [length][grid point]
};

// Evaluates lifetime_cost on lengths x a 201-point lambda grid.
// Parallelises over grid nodes; results are bit-identical for any
// worker count because every cell is computed independently.
CostSurface build_cost_surface(const GshpParams& params, unsigned workers = 0);

// Same, but over a caller-supplied load profile instead of the
// synthetic one.
CostSurface build_cost_surface(const GshpParams& params, const HourlyLoadProfile& load,
                               unsigned workers = 0);

// Builds the decision problem on a freshly computed surface.
DecisionProblem<double> build_gshp_problem(const GshpParams& params, unsigned workers = 0);

// Builds the decision problem on an existing surface (which must have
// been computed for the same lengths and physics).
DecisionProblem<double> build_gshp_problem(const GshpParams& params,
                                           std::shared_ptr<const CostSurface> surface);

}  // namespace voi::gshp
