#include "voi/gshp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "voi/rng.hpp"
#include "voi/solve.hpp"

namespace voi::gshp {

namespace {

constexpr int kHoursPerYear = 8760;
constexpr int kHoursPerDay = 24;
constexpr int kHourlyWindowDays = 7;    // full hourly resolution below this age
constexpr int kDailyWindowDays = 365;   // daily blocks below this age, annual mean beyond

// Weekday heating demand shape, normalised to mean 1 below: morning and
// evening peaks, low overnight.
constexpr std::array<double, 24> kDiurnalShape = {
    0.55, 0.52, 0.50, 0.50, 0.52, 0.62, 0.85, 1.15, 1.30, 1.20, 1.05, 0.95,
    0.90, 0.88, 0.88, 0.92, 1.05, 1.22, 1.30, 1.28, 1.18, 1.00, 0.80, 0.62};

// E1(x) = -Ei(-x), the exponential integral the line source is built on.
double expint_e1(double x) {
    return -std::expint(-x);
}

}  // namespace

double HourlyLoadProfile::annual_kwh() const {
    return std::accumulate(values_kw.begin(), values_kw.end(), 0.0);
}

double HourlyLoadProfile::peak_kw() const {
    return values_kw.empty() ? 0.0 : *std::max_element(values_kw.begin(), values_kw.end());
}

double HourlyLoadProfile::mean_kw() const {
    return values_kw.empty() ? 0.0 : annual_kwh() / static_cast<double>(values_kw.size());
}

HourlyLoadProfile synthesize_load(const LoadProfileParams& params) {
    if (params.annual_kwh <= 0.0 || params.peak_kw <= 0.0) {
        throw std::invalid_argument("synthesize_load: targets must be positive");
    }
    if (params.seasonal_weight < 0.0 || params.seasonal_weight > 1.0 ||
        params.diurnal_amplitude < 0.0) {
        throw std::invalid_argument("synthesize_load: shape weights out of range");
    }

    const double diurnal_mean =
        std::accumulate(kDiurnalShape.begin(), kDiurnalShape.end(), 0.0) / 24.0;

    std::vector<double> base(kHoursPerYear);
    for (int t = 0; t < kHoursPerYear; ++t) {
        const int day = t / kHoursPerDay;
        const int hod = t % kHoursPerDay;
        const double seasonal =
            0.5 * (1.0 + std::cos(2.0 * M_PI * (static_cast<double>(day) - params.peak_day) / 365.25));
        const double season_factor = (1.0 - params.seasonal_weight) + params.seasonal_weight * seasonal;
        const double diurnal = 1.0 + params.diurnal_amplitude * (kDiurnalShape[hod] / diurnal_mean - 1.0);
        base[t] = season_factor * diurnal;
    }

    const double mean_target = params.annual_kwh / static_cast<double>(kHoursPerYear);
    const double base_mean = std::accumulate(base.begin(), base.end(), 0.0) / kHoursPerYear;
    const double base_max = *std::max_element(base.begin(), base.end());
    if (base_max - base_mean < 1e-9) {
        throw std::invalid_argument(
            "synthesize_load: shape is flat, cannot hit a peak above the mean");
    }
    // Affine map pinning the mean (hence the annual energy) and the peak.
    const double scale = (params.peak_kw - mean_target) / (base_max - base_mean);
    const double offset = mean_target - scale * base_mean;

    HourlyLoadProfile profile;
    profile.values_kw.resize(kHoursPerYear);
    for (int t = 0; t < kHoursPerYear; ++t) {
        profile.values_kw[t] = std::max(0.0, scale * base[t] + offset);
    }
    if (std::abs(profile.annual_kwh() - params.annual_kwh) > 0.01 * params.annual_kwh ||
        std::abs(profile.peak_kw() - params.peak_kw) > 0.02 * params.peak_kw) {
        throw std::invalid_argument(
            "synthesize_load: targets unreachable with the requested shape");
    }
    return profile;
}

HourlyLoadProfile load_profile_from_csv(const std::string& path,
                                        std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open load profile file: " + path);
    }
    auto trim = [](std::string s) {
        const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
        while (!s.empty() && is_space(s.front())) s.erase(s.begin());
        while (!s.empty() && is_space(s.back())) s.pop_back();
        return s;
    };

    std::string line;
    if (!std::getline(in, line) || trim(line) != "kw") {
        throw ConfigError("load profile file must start with header 'kw': " + path);
    }
    HourlyLoadProfile profile;
    profile.values_kw.reserve(kHoursPerYear);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        const std::string cell = trim(line);
        if (cell.empty()) {
            continue;
        }
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(cell, &used);
            if (used != cell.size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw ConfigError("load profile row " + std::to_string(row) + " is not a number: '" +
                              cell + "'");
        }
        if (!std::isfinite(value) || value < 0.0) {
            throw ConfigError("load profile row " + std::to_string(row) +
                              " must be finite and non-negative");
        }
        profile.values_kw.push_back(value);
    }
    if (profile.values_kw.size() != kHoursPerYear) {
        throw ConfigError("load profile must have exactly 8760 rows, got " +
                          std::to_string(profile.values_kw.size()));
    }
    if (warnings != nullptr) {
        const LoadProfileParams defaults;
        if (std::abs(profile.annual_kwh() - defaults.annual_kwh) > 0.01 * defaults.annual_kwh) {
            std::ostringstream oss;
            oss << "annual energy " << profile.annual_kwh() << " kWh deviates from the default target "
                << defaults.annual_kwh << " kWh by more than 1%";
            warnings->push_back(oss.str());
        }
        if (std::abs(profile.peak_kw() - defaults.peak_kw) > 0.02 * defaults.peak_kw) {
            std::ostringstream oss;
            oss << "peak load " << profile.peak_kw() << " kW deviates from the default target "
                << defaults.peak_kw << " kW by more than 2%";
            warnings->push_back(oss.str());
        }
    }
    return profile;
}

GshpParams::GshpParams() {
    for (int l = 140; l <= 200; l += 5) {
        lengths_m.push_back(static_cast<double>(l));
    }
}

void GshpParams::validate() const {
    if (lengths_m.empty()) {
        throw std::invalid_argument("gshp: lengths must be non-empty");
    }
    for (std::size_t i = 0; i < lengths_m.size(); ++i) {
        if (lengths_m[i] <= 0.0 || (i > 0 && lengths_m[i] <= lengths_m[i - 1])) {
            throw std::invalid_argument("gshp: lengths must be positive and strictly increasing");
        }
    }
    if (n_boreholes <= 0 || drilling_cost_per_m <= 0.0 || lifetime_years <= 0.0 ||
        electricity_price_per_kwh <= 0.0 || lambda_mu <= 0.0 || lambda_sigma < 0.0 ||
        lambda_floor <= 0.0 || volumetric_heat_capacity_mj_per_m3k <= 0.0 ||
        borehole_resistance_mk_per_w <= 0.0 || borehole_radius_m <= 0.0 || aux_cop <= 0.0) {
        throw std::invalid_argument("gshp: physical constants must be positive");
    }
    if (!(fluid_min_c < fluid_max_c)) {
        throw std::invalid_argument("gshp: fluid_min must be below fluid_max");
    }
    if (cop_intercept + cop_slope_per_c * fluid_min_c <= 1.0) {
        throw std::invalid_argument("gshp: COP at fluid_min must exceed 1");
    }
}

double DispatchResult::electricity_kwh(double aux_cop) const {
    double total = 0.0;
    for (std::size_t t = 0; t < gshp_heat_kwh.size(); ++t) {
        total += gshp_heat_kwh[t] / cop[t] + aux_heat_kwh[t] / aux_cop;
    }
    return total;
}

double DispatchResult::total_aux_kwh() const {
    return std::accumulate(aux_heat_kwh.begin(), aux_heat_kwh.end(), 0.0);
}

namespace {

// Step response of the ground at the borehole wall, per unit W/m, plus
// the pre-history decay term, for one conductivity value.  Shared by
// every length at that conductivity.
struct GroundKernel {
    double lambda = 0.0;
    // g[m]: temperature drop m hours after a unit-step extraction starts.
    std::vector<double> g;
    // dg[m] = g[m] - g[m-1]; only the hourly window uses it.
    std::vector<double> dg;
    // Unit pre-history response: drop at in-simulation hour m from a
    // unit W/m extraction sustained over the preceding history_hours.
    std::vector<double> prehistory;

    GroundKernel(const GshpParams& params, double lambda_value, int horizon_hours,
                 double history_hours)
        : lambda(lambda_value) {
        const double alpha = lambda / (params.volumetric_heat_capacity_mj_per_m3k * 1e6);
        const double beta_hours =
            params.borehole_radius_m * params.borehole_radius_m / (4.0 * alpha * 3600.0);
        const double scale = 1.0 / (4.0 * M_PI * lambda);
        g.resize(static_cast<std::size_t>(horizon_hours) + 2, 0.0);
        for (int m = 1; m < static_cast<int>(g.size()); ++m) {
            g[m] = scale * expint_e1(beta_hours / static_cast<double>(m));
        }
        dg.resize(g.size(), 0.0);
        for (std::size_t m = 1; m < g.size(); ++m) {
            dg[m] = g[m] - g[m - 1];
        }
        prehistory.resize(g.size(), 0.0);
        if (history_hours > 0.0) {
            for (std::size_t m = 1; m < g.size(); ++m) {
                const double t = static_cast<double>(m);
                prehistory[m] =
                    scale * expint_e1(beta_hours / (t + history_hours)) - g[m];
            }
        }
    }
};

struct SimulationOutput {
    DispatchResult year;       // representative (second) year
    double spin_up_aux_kwh = 0.0;
};

// Two identical load years are simulated back to back; the first year
// establishes the seasonal phase of the superposition history and the
// second is reported.  History older than the hourly window collapses
// into daily blocks, and beyond a year into a running annual mean, so a
// step costs O(window) rather than O(elapsed hours).
SimulationOutput simulate(const HourlyLoadProfile& load, const GroundKernel& kernel,
                          double length_m, const GshpParams& params) {
    const int n_steps = 2 * kHoursPerYear;
    const double meters = static_cast<double>(params.n_boreholes) * length_m;
    const double rb = params.borehole_resistance_mk_per_w;
    const double g1 = kernel.dg[1];
    const double t_ground = params.ground_temp_c;
    const double t_min = params.fluid_min_c;
    const double c0 = params.cop_intercept;
    const double c1 = params.cop_slope_per_c;

    // Steady annual-mean extraction assumed for the pre-history, W/m,
    // derived from the load and the COP at undisturbed ground
    // temperature.
    const double cop_nominal = c0 + c1 * t_ground;
    const double qbar = load.annual_kwh() * (1.0 - 1.0 / cop_nominal) * 1000.0 /
                        (static_cast<double>(kHoursPerYear) * meters);

    std::vector<double> q(n_steps, 0.0);          // W/m per hour
    std::vector<double> day_sum(n_steps / kHoursPerDay, 0.0);
    double running_day_sum = 0.0;
    double annual_sum = 0.0;                      // q-hours absorbed into the annual cell
    int annual_hours = 0;
    int absorbed_days = 0;

    SimulationOutput out;
    out.year.ground_extraction_kwh.resize(kHoursPerYear);
    out.year.gshp_heat_kwh.resize(kHoursPerYear);
    out.year.aux_heat_kwh.resize(kHoursPerYear);
    out.year.fluid_temp_c.resize(kHoursPerYear);
    out.year.cop.resize(kHoursPerYear);

    for (int n = 0; n < n_steps; ++n) {
        const int current_day = n / kHoursPerDay;
        const int cutoff_day = std::max(0, current_day - kHourlyWindowDays);
        const int year_cutoff_day = std::max(0, current_day - kDailyWindowDays);
        while (absorbed_days < year_cutoff_day) {
            annual_sum += day_sum[absorbed_days];
            annual_hours += kHoursPerDay;
            ++absorbed_days;
        }

        // Superposed response of everything before this hour.
        double drop = qbar * kernel.prehistory[n + 1];
        if (annual_hours > 0) {
            drop += (annual_sum / annual_hours) *
                    (kernel.g[n + 1] - kernel.g[n + 1 - annual_hours]);
        }
        for (int d = absorbed_days; d < cutoff_day; ++d) {
            drop += (day_sum[d] / kHoursPerDay) *
                    (kernel.g[n + 1 - d * kHoursPerDay] -
                     kernel.g[n + 1 - (d + 1) * kHoursPerDay]);
        }
        for (int j = cutoff_day * kHoursPerDay; j < n; ++j) {
            drop += q[j] * kernel.dg[n + 1 - j];
        }

        const double load_kw = load.values_kw[n % kHoursPerYear];
        double qn = 0.0;
        double t_fluid = t_ground - drop;
        double e_ground = 0.0;
        double e_gshp = 0.0;
        double e_aux = 0.0;
        double cop = c0 + c1 * t_fluid;

        if (load_kw > 0.0) {
            // Try to meet the whole load from the ground: T_fluid and
            // the COP are coupled through the current-hour pulse, so
            // iterate the affine fixed point.
            double t_iter = t_fluid;
            for (int it = 0; it < 100; ++it) {
                const double cop_it = c0 + c1 * t_iter;
                const double q_it = load_kw * (1.0 - 1.0 / cop_it) * 1000.0 / meters;
                const double t_next = t_ground - drop - q_it * (g1 + rb);
                if (std::abs(t_next - t_iter) < 1e-13) {
                    t_iter = t_next;
                    break;
                }
                t_iter = t_next;
            }
            if (t_iter >= t_min) {
                t_fluid = t_iter;
                cop = c0 + c1 * t_fluid;
                e_gshp = load_kw;
                e_ground = load_kw * (1.0 - 1.0 / cop);
                qn = e_ground * 1000.0 / meters;
            } else {
                // Constraint binds: extract the most the ground allows
                // at T_fluid = fluid_min and top up with the auxiliary.
                const double q_max = (t_ground - drop - t_min) / (g1 + rb);
                if (q_max < 0.0) {
                    throw NumericalError(
                        "gshp dispatch: fluid temperature constraint unsatisfiable even at zero "
                        "extraction at hour " +
                        std::to_string(n) + " (length " + std::to_string(length_m) + " m, lambda " +
                        std::to_string(kernel.lambda) + " W/mK)");
                }
                t_fluid = t_min;
                cop = c0 + c1 * t_min;
                qn = q_max;
                e_ground = qn * meters / 1000.0;
                e_gshp = e_ground / (1.0 - 1.0 / cop);
                if (e_gshp > load_kw) {
                    // Regime boundary rounding: never deliver more than the load.
                    e_gshp = load_kw;
                    e_ground = load_kw * (1.0 - 1.0 / cop);
                    qn = e_ground * 1000.0 / meters;
                }
                e_aux = load_kw - e_gshp;
            }
        }
        if (t_fluid > params.fluid_max_c) {
            throw NumericalError("gshp dispatch: fluid temperature exceeded fluid_max at hour " +
                                 std::to_string(n));
        }

        q[n] = qn;
        running_day_sum += qn;
        if ((n + 1) % kHoursPerDay == 0) {
            day_sum[n / kHoursPerDay] = running_day_sum;
            running_day_sum = 0.0;
        }

        if (n >= kHoursPerYear) {
            const int t = n - kHoursPerYear;
            out.year.ground_extraction_kwh[t] = e_ground;
            out.year.gshp_heat_kwh[t] = e_gshp;
            out.year.aux_heat_kwh[t] = e_aux;
            out.year.fluid_temp_c[t] = t_fluid;
            out.year.cop[t] = cop;
        } else {
            out.spin_up_aux_kwh += e_aux;
        }
    }
    return out;
}

bool length_index_of(const GshpParams& params, double length_m, std::size_t* index) {
    for (std::size_t i = 0; i < params.lengths_m.size(); ++i) {
        if (params.lengths_m[i] == length_m) {
            *index = i;
            return true;
        }
    }
    return false;
}

}  // namespace

DispatchResult dispatch(const HourlyLoadProfile& load, double lambda, double length_m,
                        const GshpParams& params) {
    params.validate();
    if (load.values_kw.size() != static_cast<std::size_t>(kHoursPerYear)) {
        throw std::invalid_argument("dispatch: load profile must cover 8760 hours");
    }
    if (!(lambda >= params.lambda_floor)) {
        throw std::invalid_argument("dispatch: lambda below lambda_floor");
    }
    std::size_t unused = 0;
    if (!length_index_of(params, length_m, &unused)) {
        throw std::invalid_argument("dispatch: length is not one of the configured options");
    }
    const double history_hours =
        std::max(0.0, params.lifetime_years - 2.0) * static_cast<double>(kHoursPerYear);
    const GroundKernel kernel(params, lambda, 2 * kHoursPerYear, history_hours);
    return simulate(load, kernel, length_m, params).year;
}

double lifetime_cost(double lambda, double length_m, const GshpParams& params) {
    const DispatchResult year = dispatch(synthesize_load(params.load), lambda, length_m, params);
    const double capital =
        params.drilling_cost_per_m * length_m * static_cast<double>(params.n_boreholes);
    return capital + params.lifetime_years * params.electricity_price_per_kwh *
                         year.electricity_kwh(params.aux_cop);
}

CostSurface::CostSurface(std::vector<double> lambda_grid, std::vector<std::vector<double>> costs)
    : lambda_grid_(std::move(lambda_grid)), costs_(std::move(costs)) {
    if (lambda_grid_.size() < 2) {
        throw std::invalid_argument("CostSurface: grid needs at least two nodes");
    }
    for (const auto& row : costs_) {
        if (row.size() != lambda_grid_.size()) {
            throw std::invalid_argument("CostSurface: cost row does not match grid");
        }
    }
}

double CostSurface::interpolate(std::size_t length_index, double lambda) const {
    const auto& row = costs_.at(length_index);
    const double lo = lambda_grid_.front();
    const double hi = lambda_grid_.back();
    const double x = std::clamp(lambda, lo, hi);
    const double h = (hi - lo) / static_cast<double>(lambda_grid_.size() - 1);
    auto i = static_cast<std::size_t>((x - lo) / h);
    i = std::min(i, lambda_grid_.size() - 2);
    // Exact node queries return the node value, untouched by rounding.
    if (x == lambda_grid_[i]) {
        return row[i];
    }
    if (x == lambda_grid_[i + 1]) {
        return row[i + 1];
    }
    const double x0 = lambda_grid_[i];
    const double x1 = lambda_grid_[i + 1];
    const double t = std::clamp((x - x0) / (x1 - x0), 0.0, 1.0);
    return row[i] + t * (row[i + 1] - row[i]);
}

CostSurface build_cost_surface(const GshpParams& params, unsigned workers) {
    return build_cost_surface(params, synthesize_load(params.load), workers);
}

CostSurface build_cost_surface(const GshpParams& params, const HourlyLoadProfile& load,
                               unsigned workers) {
    params.validate();
    if (load.values_kw.size() != static_cast<std::size_t>(kHoursPerYear)) {
        throw std::invalid_argument("build_cost_surface: load profile must cover 8760 hours");
    }
    constexpr std::size_t kGridPoints = 201;
    const double lo = std::max(params.lambda_floor, params.lambda_mu - 6.0 * params.lambda_sigma);
    const double hi = std::max(params.lambda_mu + 6.0 * params.lambda_sigma, lo + 1e-6);
    std::vector<double> grid(kGridPoints);
    for (std::size_t i = 0; i < kGridPoints; ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kGridPoints - 1);
    }

    const double history_hours =
        std::max(0.0, params.lifetime_years - 2.0) * static_cast<double>(kHoursPerYear);

    std::vector<std::vector<double>> costs(params.lengths_m.size(),
                                           std::vector<double>(kGridPoints, 0.0));
    detail::parallel_for(kGridPoints, workers, [&](std::size_t node) {
        const GroundKernel kernel(params, grid[node], 2 * kHoursPerYear, history_hours);
        for (std::size_t li = 0; li < params.lengths_m.size(); ++li) {
            const double length = params.lengths_m[li];
            const DispatchResult year = simulate(load, kernel, length, params).year;
            const double capital = params.drilling_cost_per_m * length *
                                   static_cast<double>(params.n_boreholes);
            costs[li][node] = capital + params.lifetime_years * params.electricity_price_per_kwh *
                                            year.electricity_kwh(params.aux_cop);
        }
    });
    return CostSurface(std::move(grid), std::move(costs));
}

DecisionProblem<double> build_gshp_problem(const GshpParams& params, unsigned workers) {
    return build_gshp_problem(params,
                              std::make_shared<const CostSurface>(build_cost_surface(params, workers)));
}

DecisionProblem<double> build_gshp_problem(const GshpParams& params,
                                           std::shared_ptr<const CostSurface> surface) {
    params.validate();
    if (!surface || surface->costs().size() != params.lengths_m.size()) {
        throw std::invalid_argument("build_gshp_problem: surface does not match length options");
    }
    DecisionProblem<double> problem;
    for (double length : params.lengths_m) {
        std::ostringstream label;
        label << length;
        problem.actions.push_back(label.str());
    }
    const double mu = params.lambda_mu;
    const double sigma = params.lambda_sigma;
    const double floor = params.lambda_floor;
    problem.sampler = [mu, sigma, floor](std::uint64_t seed, std::uint64_t index) {
        const double draw = mu + sigma * sample_index_rng(seed, index).normal();
        return std::max(floor, draw);
    };
    problem.utility = [surface](std::size_t action, const double& lambda) {
        return surface->interpolate(action, lambda);
    };
    problem.sense = Sense::minimize;
    return problem;
}

}  // namespace voi::gshp
