#include "voi/cli.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "voi/ashp.hpp"
#include "voi/gshp.hpp"
#include "voi/solve.hpp"
#include "voi/ventilation.hpp"

namespace voi::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double parsed = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("parameter '" + key + "': cannot parse '" + value + "' as a number");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int parsed = std::stoi(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("parameter '" + key + "': cannot parse '" + value + "' as an integer");
    }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(parse_double(key, cell));
    }
    if (out.empty()) {
        throw ConfigError("parameter '" + key + "': empty list");
    }
    return out;
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

void apply_overrides(const std::map<std::string, std::string>& overrides,
                     const std::map<std::string, Setter>& setters, const std::string& case_name) {
    for (const auto& [key, value] : overrides) {
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("unknown parameter '" + key + "' for case '" + case_name + "'");
        }
        it->second(key, value);
    }
}

std::map<std::string, Setter> ventilation_setters(vent::VentilationParams& p) {
    return {
        {"floor_area", [&p](const std::string& k, const std::string& v) { p.floor_area_m2 = parse_double(k, v); }},
        {"ceiling_height", [&p](const std::string& k, const std::string& v) { p.ceiling_height_m = parse_double(k, v); }},
        {"max_occupancy", [&p](const std::string& k, const std::string& v) { p.max_occupancy = parse_int(k, v); }},
        {"ach_options", [&p](const std::string& k, const std::string& v) { p.ach_options = parse_double_list(k, v); }},
        {"fan_specific_power", [&p](const std::string& k, const std::string& v) { p.fan_specific_power_w_per_lps = parse_double(k, v); }},
        {"fan_efficiency", [&p](const std::string& k, const std::string& v) { p.fan_efficiency = parse_double(k, v); }},
        {"fan_hours", [&p](const std::string& k, const std::string& v) { p.fan_hours_per_day = parse_double(k, v); }},
        {"electricity_price", [&p](const std::string& k, const std::string& v) { p.electricity_price_per_kwh = parse_double(k, v); }},
        {"prevalence", [&p](const std::string& k, const std::string& v) { p.prevalence = parse_double(k, v); }},
        {"sick_days", [&p](const std::string& k, const std::string& v) { p.sick_days_per_infection = parse_double(k, v); }},
        {"daily_salary_loss", [&p](const std::string& k, const std::string& v) { p.daily_salary_loss = parse_double(k, v); }},
        {"exposure_hours", [&p](const std::string& k, const std::string& v) { p.exposure_hours_per_day = parse_double(k, v); }},
        {"quanta_rate", [&p](const std::string& k, const std::string& v) { p.quanta_rate_per_hour = parse_double(k, v); }},
        {"breathing_rate", [&p](const std::string& k, const std::string& v) { p.breathing_rate_m3_per_hour = parse_double(k, v); }},
    };
}

std::map<std::string, Setter> ashp_setters(ashp::AshpParams& p) {
    return {
        {"heating_load", [&p](const std::string& k, const std::string& v) { p.heating_load_kwh_per_year = parse_double(k, v); }},
        {"base_spf", [&p](const std::string& k, const std::string& v) { p.base_spf = parse_double(k, v); }},
        {"beta_a", [&p](const std::string& k, const std::string& v) { p.beta_a = parse_double(k, v); }},
        {"beta_b", [&p](const std::string& k, const std::string& v) { p.beta_b = parse_double(k, v); }},
        {"gamma", [&p](const std::string& k, const std::string& v) { p.gamma = parse_double(k, v); }},
        {"maintenance_cost", [&p](const std::string& k, const std::string& v) { p.maintenance_cost_per_activity = parse_double(k, v); }},
        {"electricity_price", [&p](const std::string& k, const std::string& v) { p.electricity_price_per_kwh = parse_double(k, v); }},
        {"alpha_mu", [&p](const std::string& k, const std::string& v) { p.alpha_mu = parse_double(k, v); }},
        {"alpha_sigma", [&p](const std::string& k, const std::string& v) { p.alpha_sigma = parse_double(k, v); }},
        {"alpha_cap", [&p](const std::string& k, const std::string& v) { p.alpha_cap = parse_double(k, v); }},
        {"n_max", [&p](const std::string& k, const std::string& v) { p.n_max = parse_int(k, v); }},
    };
}

std::map<std::string, Setter> gshp_setters(gshp::GshpParams& p) {
    return {
        {"lengths", [&p](const std::string& k, const std::string& v) { p.lengths_m = parse_double_list(k, v); }},
        {"n_boreholes", [&p](const std::string& k, const std::string& v) { p.n_boreholes = parse_int(k, v); }},
        {"drilling_cost", [&p](const std::string& k, const std::string& v) { p.drilling_cost_per_m = parse_double(k, v); }},
        {"lifetime", [&p](const std::string& k, const std::string& v) { p.lifetime_years = parse_double(k, v); }},
        {"electricity_price", [&p](const std::string& k, const std::string& v) { p.electricity_price_per_kwh = parse_double(k, v); }},
        {"lambda_mu", [&p](const std::string& k, const std::string& v) { p.lambda_mu = parse_double(k, v); }},
        {"lambda_sigma", [&p](const std::string& k, const std::string& v) { p.lambda_sigma = parse_double(k, v); }},
        {"lambda_floor", [&p](const std::string& k, const std::string& v) { p.lambda_floor = parse_double(k, v); }},
        {"fluid_min", [&p](const std::string& k, const std::string& v) { p.fluid_min_c = parse_double(k, v); }},
        {"fluid_max", [&p](const std::string& k, const std::string& v) { p.fluid_max_c = parse_double(k, v); }},
        {"ground_temp", [&p](const std::string& k, const std::string& v) { p.ground_temp_c = parse_double(k, v); }},
        {"volumetric_heat_capacity", [&p](const std::string& k, const std::string& v) { p.volumetric_heat_capacity_mj_per_m3k = parse_double(k, v); }},
        {"borehole_resistance", [&p](const std::string& k, const std::string& v) { p.borehole_resistance_mk_per_w = parse_double(k, v); }},
        {"borehole_radius", [&p](const std::string& k, const std::string& v) { p.borehole_radius_m = parse_double(k, v); }},
        {"cop_intercept", [&p](const std::string& k, const std::string& v) { p.cop_intercept = parse_double(k, v); }},
        {"cop_slope", [&p](const std::string& k, const std::string& v) { p.cop_slope_per_c = parse_double(k, v); }},
        {"aux_cop", [&p](const std::string& k, const std::string& v) { p.aux_cop = parse_double(k, v); }},
        {"load_annual_kwh", [&p](const std::string& k, const std::string& v) { p.load.annual_kwh = parse_double(k, v); }},
        {"load_peak_kw", [&p](const std::string& k, const std::string& v) { p.load.peak_kw = parse_double(k, v); }},
        {"load_peak_day", [&p](const std::string& k, const std::string& v) { p.load.peak_day = parse_double(k, v); }},
        {"load_seasonal_weight", [&p](const std::string& k, const std::string& v) { p.load.seasonal_weight = parse_double(k, v); }},
        {"load_diurnal_amplitude", [&p](const std::string& k, const std::string& v) { p.load.diurnal_amplitude = parse_double(k, v); }},
    };
}

ordered_json ventilation_json(const vent::VentilationParams& p) {
    return ordered_json{{"floor_area", p.floor_area_m2},
                        {"ceiling_height", p.ceiling_height_m},
                        {"max_occupancy", p.max_occupancy},
                        {"ach_options", p.ach_options},
                        {"fan_specific_power", p.fan_specific_power_w_per_lps},
                        {"fan_efficiency", p.fan_efficiency},
                        {"fan_hours", p.fan_hours_per_day},
                        {"electricity_price", p.electricity_price_per_kwh},
                        {"prevalence", p.prevalence},
                        {"sick_days", p.sick_days_per_infection},
                        {"daily_salary_loss", p.daily_salary_loss},
                        {"exposure_hours", p.exposure_hours_per_day},
                        {"quanta_rate", p.quanta_rate_per_hour},
                        {"breathing_rate", p.breathing_rate_m3_per_hour}};
}

ordered_json ashp_json(const ashp::AshpParams& p) {
    return ordered_json{{"heating_load", p.heating_load_kwh_per_year},
                        {"base_spf", p.base_spf},
                        {"beta_a", p.beta_a},
                        {"beta_b", p.beta_b},
                        {"gamma", p.gamma},
                        {"maintenance_cost", p.maintenance_cost_per_activity},
                        {"electricity_price", p.electricity_price_per_kwh},
                        {"alpha_mu", p.alpha_mu},
                        {"alpha_sigma", p.alpha_sigma},
                        {"alpha_cap", p.alpha_cap},
                        {"n_max", p.n_max}};
}

ordered_json gshp_json(const gshp::GshpParams& p) {
    return ordered_json{{"lengths", p.lengths_m},
                        {"n_boreholes", p.n_boreholes},
                        {"drilling_cost", p.drilling_cost_per_m},
                        {"lifetime", p.lifetime_years},
                        {"electricity_price", p.electricity_price_per_kwh},
                        {"lambda_mu", p.lambda_mu},
                        {"lambda_sigma", p.lambda_sigma},
                        {"lambda_floor", p.lambda_floor},
                        {"fluid_min", p.fluid_min_c},
                        {"fluid_max", p.fluid_max_c},
                        {"ground_temp", p.ground_temp_c},
                        {"volumetric_heat_capacity", p.volumetric_heat_capacity_mj_per_m3k},
                        {"borehole_resistance", p.borehole_resistance_mk_per_w},
                        {"borehole_radius", p.borehole_radius_m},
                        {"cop_intercept", p.cop_intercept},
                        {"cop_slope", p.cop_slope_per_c},
                        {"aux_cop", p.aux_cop},
                        {"load_annual_kwh", p.load.annual_kwh},
                        {"load_peak_kw", p.load.peak_kw},
                        {"load_peak_day", p.load.peak_day},
                        {"load_seasonal_weight", p.load.seasonal_weight},
                        {"load_diurnal_amplitude", p.load.diurnal_amplitude}};
}

ordered_json estimate_json(const VoiEstimate& estimate) {
    ordered_json per_action = ordered_json::array();
    for (const auto& av : estimate.per_action_values) {
        per_action.push_back(ordered_json{{"action", av.action}, {"value", av.value}, {"se", av.se}});
    }
    return ordered_json{{"prior_action", estimate.prior_action},
                        {"prior_value", estimate.prior_value},
                        {"preposterior_value", estimate.preposterior_value},
                        {"evpi", estimate.evpi},
                        {"se_prior", estimate.se_prior},
                        {"se_evpi", estimate.se_evpi},
                        {"per_action_values", per_action}};
}

void flatten(const ordered_json& node, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& rows) {
    if (node.is_object()) {
        for (const auto& [key, value] : node.items()) {
            flatten(value, prefix.empty() ? key : prefix + "." + key, rows);
        }
    } else if (node.is_array()) {
        std::size_t i = 0;
        for (const auto& value : node) {
            flatten(value, prefix + "." + std::to_string(i), rows);
            ++i;
        }
    } else if (node.is_string()) {
        rows.emplace_back(prefix, node.get<std::string>());
    } else {
        rows.emplace_back(prefix, node.dump());
    }
}

std::string render_csv(const ordered_json& doc) {
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(doc, "", rows);
    std::ostringstream out;
    out << "field,value\n";
    for (const auto& [key, value] : rows) {
        out << key << "," << value << "\n";
    }
    return out.str();
}

// Shortest representation that parses back to the identical double.
std::string number_repr(double x) {
    return ordered_json(x).dump();
}

void write_text(const std::optional<std::string>& path, const std::string& text) {
    if (path) {
        std::ofstream out(*path, std::ios::binary);
        if (!out) {
            throw ConfigError("cannot open output file: " + *path);
        }
        out << text;
    } else {
        std::cout << text;
    }
}

struct SolvedRun {
    ordered_json parameters;
    VoiEstimate estimate;
    std::optional<VoiEstimate> exact;
    std::vector<TraceRow> trace;
};

template <class Theta>
void solve_into(SolvedRun& solved, const DecisionProblem<Theta>& problem,
                const RunConfig& config) {
    solved.estimate = solve_voi(problem, config.n_samples, config.seed, config.workers);
    if (config.trace_stride) {
        solved.trace = convergence_trace(problem, config.n_samples, config.seed,
                                         *config.trace_stride);
    }
}

SolvedRun execute(const RunConfig& config) {
    SolvedRun solved;
    if (config.problem == "ventilation") {
        vent::VentilationParams params;
        apply_overrides(config.overrides, ventilation_setters(params), config.problem);
        solved.parameters = ventilation_json(params);
        solve_into(solved, vent::build_ventilation_problem(params), config);
    } else if (config.problem == "ashp") {
        ashp::AshpParams params;
        apply_overrides(config.overrides, ashp_setters(params), config.problem);
        solved.parameters = ashp_json(params);
        solve_into(solved, ashp::build_ashp_problem(params), config);
    } else if (config.problem == "gshp") {
        gshp::GshpParams params;
        apply_overrides(config.overrides, gshp_setters(params), config.problem);
        solved.parameters = gshp_json(params);
        DecisionProblem<double> problem;
        if (config.load_csv) {
            std::vector<std::string> warnings;
            const gshp::HourlyLoadProfile profile =
                gshp::load_profile_from_csv(*config.load_csv, &warnings);
            for (const auto& warning : warnings) {
                std::cerr << "warning: " << warning << "\n";
            }
            const auto surface = std::make_shared<const gshp::CostSurface>(
                gshp::build_cost_surface(params, profile, config.workers));
            problem = gshp::build_gshp_problem(params, surface);
            solved.parameters["load_csv"] = *config.load_csv;
        } else {
            problem = gshp::build_gshp_problem(params, config.workers);
        }
        solve_into(solved, problem, config);
    } else if (config.problem == "tabular") {
        const TabularProblem tabular = parse_tabular(config.tabular_path);
        apply_overrides(config.overrides, {}, config.problem);
        solved.parameters = ordered_json{{"path", config.tabular_path},
                                         {"sense", to_string(tabular.sense)},
                                         {"actions", tabular.actions},
                                         {"states", tabular.states},
                                         {"probabilities", tabular.probabilities},
                                         {"utilities", tabular.utilities}};
        solved.exact = solve_exact(tabular);
        solve_into(solved, to_decision_problem(tabular), config);
    } else {
        throw ConfigError("unknown problem '" + config.problem +
                          "' (expected ventilation, ashp, gshp, or tabular)");
    }
    return solved;
}

}  // namespace

TabularProblem parse_tabular(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open tabular problem file: " + path);
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("tabular file " + path + " is not valid JSON: " + e.what());
    }

    TabularProblem problem;
    try {
        const std::string sense = doc.at("sense").get<std::string>();
        if (sense == "maximize") {
            problem.sense = Sense::maximize;
        } else if (sense == "minimize") {
            problem.sense = Sense::minimize;
        } else {
            throw ConfigError("field 'sense' must be \"maximize\" or \"minimize\"");
        }
        problem.actions = doc.at("actions").get<std::vector<std::string>>();
        problem.states = doc.at("states").get<std::vector<std::string>>();
        problem.probabilities = doc.at("probabilities").get<std::vector<double>>();
        problem.utilities = doc.at("utilities").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("tabular file " + path + ": " + e.what());
    }
    try {
        problem.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("tabular file " + path + ": " + e.what());
    }
    return problem;
}

int run(const RunConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    try {
        if (config.problem == "tabular" && config.tabular_path.empty()) {
            throw ConfigError("tabular runs need a problem file path");
        }
        const SolvedRun solved = execute(config);

        ordered_json doc;
        doc["problem"] = config.problem;
        doc["n_samples"] = config.n_samples;
        doc["seed"] = config.seed;
        doc["parameters"] = solved.parameters;
        doc["monte_carlo"] = estimate_json(solved.estimate);
        if (solved.exact) {
            doc["exact"] = estimate_json(*solved.exact);
        }
        std::optional<std::string> trace_path;
        if (config.trace_stride) {
            trace_path = config.output_path ? *config.output_path + ".trace.csv"
                                            : std::string("voi_trace.csv");
            doc["trace_path"] = *trace_path;
        }
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
        doc["wall_clock_seconds"] = elapsed.count();

        if (trace_path) {
            std::ostringstream out;
            out << "n,prior_value,evpi\n";
            for (const TraceRow& row : solved.trace) {
                out << row.n << "," << number_repr(row.prior_value) << ","
                    << number_repr(row.evpi) << "\n";
            }
            write_text(trace_path, out.str());
        }
        if (config.format == OutputFormat::json) {
            write_text(config.output_path, doc.dump(2) + "\n");
        } else {
            write_text(config.output_path, render_csv(doc));
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}

int run_main(int argc, const char* const* argv) {
    CLI::App app{"Value-of-information analysis for stochastic decision problems"};
    app.require_subcommand(1);

    RunConfig config;
    std::vector<std::string> sets;
    std::string format = "json";
    std::string output;
    std::string load_csv;
    std::uint64_t trace_stride = 0;

    CLI::App* run_cmd = app.add_subcommand(
        "run", "Solve a built-in case study or a tabular problem file");
    run_cmd->add_option("case", config.problem,
                        "Problem: ventilation | ashp | gshp | tabular")->required();
    run_cmd->add_option("file", config.tabular_path, "Tabular problem JSON (case = tabular)");
    run_cmd->add_option("--samples", config.n_samples, "Monte Carlo sample count");
    run_cmd->add_option("--seed", config.seed, "RNG seed");
    run_cmd->add_option("--set", sets, "Parameter override key=value (repeatable)");
    run_cmd->add_option("--trace", trace_stride, "Emit a convergence trace every STRIDE samples");
    run_cmd->add_option("--output", output, "Write the result document to this path");
    run_cmd->add_option("--format", format, "Result format: json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
    run_cmd->add_option("--workers", config.workers, "Worker threads (0 = hardware)");
    run_cmd->add_option("--load-csv", load_csv, "gshp: hourly load profile CSV (header 'kw')");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
            return 2;
        }
        config.overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (trace_stride > 0) {
        config.trace_stride = trace_stride;
    }
    if (!output.empty()) {
        config.output_path = output;
    }
    if (!load_csv.empty()) {
        config.load_csv = load_csv;
    }
    config.format = format == "csv" ? OutputFormat::csv : OutputFormat::json;
    return run(config);
}

}  // namespace voi::cli
