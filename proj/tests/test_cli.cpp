#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "voi/cli.hpp"
#include "voi/solve.hpp"
#include "voi/ventilation.hpp"

using namespace voi;
using namespace voi::cli;
namespace fs = std::filesystem;

namespace {

const std::string kDataDir = VOI_DATA_DIR;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("voi_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out);
    out << text;
}

int run_argv(std::initializer_list<const char*> args) {
    std::vector<const char*> argv(args);
    return run_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("parse_tabular accepts the shipped 2x2 fixture") {
    const TabularProblem p = parse_tabular(kDataDir + "/two_by_two.json");
    CHECK(p.actions.size() == 2);
    CHECK(p.states.size() == 2);
    CHECK(p.sense == Sense::maximize);
    const VoiEstimate exact = solve_exact(p);
    CHECK(exact.evpi == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("parse_tabular rejects malformed documents with a clear message") {
    TempDir tmp;
    SUBCASE("probability sum violation") {
        spit(tmp.file("bad.json"), R"({"sense":"maximize","actions":["a","b"],
            "states":["x","y"],"probabilities":[0.5,0.6],
            "utilities":[[1,0],[0,1]]})");
        try {
            parse_tabular(tmp.file("bad.json"));
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("probabilities sum to 1.1") != std::string::npos);
        }
    }
    SUBCASE("utilities row count mismatch") {
        spit(tmp.file("dims.json"), R"({"sense":"maximize","actions":["a","b"],
            "states":["x","y"],"probabilities":[0.5,0.5],
            "utilities":[[1,0]]})");
        try {
            parse_tabular(tmp.file("dims.json"));
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("utilities") != std::string::npos);
        }
    }
    SUBCASE("not JSON at all") {
        spit(tmp.file("junk.json"), "not json");
        CHECK_THROWS_AS(parse_tabular(tmp.file("junk.json")), ConfigError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(parse_tabular(tmp.file("absent.json")), ConfigError);
    }
    SUBCASE("bad sense value") {
        spit(tmp.file("sense.json"), R"({"sense":"upwards","actions":["a"],
            "states":["x"],"probabilities":[1.0],"utilities":[[1]]})");
        CHECK_THROWS_AS(parse_tabular(tmp.file("sense.json")), ConfigError);
    }
}

TEST_CASE("run emits a result document and honours exit codes") {
    TempDir tmp;
    RunConfig config;
    config.problem = "ventilation";
    config.n_samples = 2000;
    config.seed = 1;
    config.output_path = tmp.file("out.json");

    SUBCASE("successful run writes parseable JSON with the solver fields") {
        REQUIRE(run(config) == 0);
        const auto doc = nlohmann::json::parse(slurp(tmp.file("out.json")));
        CHECK(doc.at("problem") == "ventilation");
        CHECK(doc.at("n_samples") == 2000);
        CHECK(doc.at("seed") == 1);
        CHECK(doc.at("monte_carlo").contains("prior_action"));
        CHECK(doc.at("monte_carlo").at("per_action_values").size() == 4);
        CHECK(doc.at("parameters").at("floor_area") == 500.0);
        CHECK(doc.contains("wall_clock_seconds"));

        // Numeric fields round-trip exactly against a fresh solve.
        const VoiEstimate fresh =
            solve_voi(vent::build_ventilation_problem(vent::VentilationParams{}), 2000, 1);
        CHECK(doc.at("monte_carlo").at("prior_value").get<double>() == fresh.prior_value);
        CHECK(doc.at("monte_carlo").at("evpi").get<double>() == fresh.evpi);
        CHECK(doc.at("monte_carlo").at("se_evpi").get<double>() == fresh.se_evpi);
    }
    SUBCASE("same config twice is byte-identical apart from the wall clock") {
        RunConfig second = config;
        second.output_path = tmp.file("out2.json");
        REQUIRE(run(config) == 0);
        REQUIRE(run(second) == 0);
        auto a = nlohmann::ordered_json::parse(slurp(tmp.file("out.json")));
        auto b = nlohmann::ordered_json::parse(slurp(tmp.file("out2.json")));
        a.erase("wall_clock_seconds");
        b.erase("wall_clock_seconds");
        CHECK(a.dump() == b.dump());
    }
    SUBCASE("parameter overrides are applied and echoed") {
        config.overrides["prevalence"] = "0";
        REQUIRE(run(config) == 0);
        const auto doc = nlohmann::json::parse(slurp(tmp.file("out.json")));
        CHECK(doc.at("parameters").at("prevalence") == 0.0);
        CHECK(doc.at("monte_carlo").at("prior_action") == "1");
    }
    SUBCASE("unknown override key exits 2") {
        config.overrides["no_such_knob"] = "1";
        CHECK(run(config) == 2);
    }
    SUBCASE("sample budget below the minimum exits 2") {
        config.n_samples = 1;
        CHECK(run(config) == 2);
    }
    SUBCASE("unknown problem exits 2") {
        config.problem = "fusion_reactor";
        CHECK(run(config) == 2);
    }
}

TEST_CASE("tabular runs report Monte Carlo and exact blocks side by side") {
    TempDir tmp;
    RunConfig config;
    config.problem = "tabular";
    config.tabular_path = kDataDir + "/two_by_two.json";
    config.n_samples = 100000;
    config.seed = 0;
    config.output_path = tmp.file("tab.json");
    REQUIRE(run(config) == 0);
    const auto doc = nlohmann::json::parse(slurp(tmp.file("tab.json")));
    const double mc_evpi = doc.at("monte_carlo").at("evpi").get<double>();
    const double exact_evpi = doc.at("exact").at("evpi").get<double>();
    const double se = doc.at("monte_carlo").at("se_evpi").get<double>();
    CHECK(exact_evpi == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(std::abs(mc_evpi - exact_evpi) <= 4.0 * se);
    CHECK(doc.at("exact").at("se_evpi") == 0.0);

    SUBCASE("overrides are rejected for tabular problems") {
        config.overrides["anything"] = "1";
        CHECK(run(config) == 2);
    }
    SUBCASE("missing path exits 2") {
        config.tabular_path.clear();
        CHECK(run(config) == 2);
    }
}

TEST_CASE("trace artifact agrees with the headline result exactly") {
    TempDir tmp;
    RunConfig config;
    config.problem = "ashp";
    config.n_samples = 20000;
    config.seed = 4;
    config.trace_stride = 3000;
    config.output_path = tmp.file("run.json");
    REQUIRE(run(config) == 0);

    const auto doc = nlohmann::json::parse(slurp(tmp.file("run.json")));
    CHECK(doc.at("trace_path") == tmp.file("run.json") + ".trace.csv");
    const std::string trace = slurp(tmp.file("run.json") + ".trace.csv");
    std::istringstream lines(trace);
    std::string line;
    std::string last;
    std::string header;
    std::getline(lines, header);
    CHECK(header == "n,prior_value,evpi");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        if (!line.empty()) {
            last = line;
            ++rows;
        }
    }
    CHECK(rows == 7);  // 6 stride rows plus the final partial row
    std::istringstream cells(last);
    std::string n_str, prior_str, evpi_str;
    std::getline(cells, n_str, ',');
    std::getline(cells, prior_str, ',');
    std::getline(cells, evpi_str, ',');
    CHECK(n_str == "20000");
    CHECK(std::stod(prior_str) == doc.at("monte_carlo").at("prior_value").get<double>());
    CHECK(std::stod(evpi_str) == doc.at("monte_carlo").at("evpi").get<double>());
}

TEST_CASE("csv format is a flat projection of the JSON document") {
    TempDir tmp;
    RunConfig config;
    config.problem = "ventilation";
    config.n_samples = 2000;
    config.seed = 1;
    config.format = OutputFormat::csv;
    config.output_path = tmp.file("out.csv");
    REQUIRE(run(config) == 0);
    const std::string csv = slurp(tmp.file("out.csv"));
    CHECK(csv.find("field,value\n") == 0);
    CHECK(csv.find("problem,ventilation") != std::string::npos);
    CHECK(csv.find("monte_carlo.prior_action,") != std::string::npos);
    CHECK(csv.find("monte_carlo.evpi,") != std::string::npos);
    CHECK(csv.find("parameters.floor_area,") != std::string::npos);
    CHECK(csv.find("monte_carlo.per_action_values.0.value,") != std::string::npos);
}

TEST_CASE("gshp runs accept an external load profile") {
    TempDir tmp;
    // A flat 13.24 kW year keeps the physics trivial; off-target
    // annual/peak values only warn.
    const std::string csv = tmp.file("load.csv");
    {
        std::ofstream out(csv);
        out << "kw\n";
        for (int i = 0; i < 8760; ++i) {
            out << "10.0\n";
        }
    }
    RunConfig config;
    config.problem = "gshp";
    config.load_csv = csv;
    config.overrides["lengths"] = "140,170";  // small surface, fast test
    config.n_samples = 5000;
    config.seed = 2;
    config.output_path = tmp.file("gshp.json");
    REQUIRE(run(config) == 0);
    const auto doc = nlohmann::json::parse(slurp(tmp.file("gshp.json")));
    CHECK(doc.at("parameters").at("load_csv") == csv);
    CHECK(doc.at("monte_carlo").at("per_action_values").size() == 2);
}

TEST_CASE("command line front end") {
    TempDir tmp;
    const std::string out = tmp.file("cli.json");
    SUBCASE("a small ventilation run succeeds") {
        CHECK(run_argv({"voi", "run", "ventilation", "--samples", "2000", "--seed", "1",
                        "--output", out.c_str()}) == 0);
        CHECK(fs::exists(out));
    }
    SUBCASE("below-minimum sample count exits 2") {
        CHECK(run_argv({"voi", "run", "ashp", "--samples", "1"}) == 2);
    }
    SUBCASE("unknown case exits 2") {
        CHECK(run_argv({"voi", "run", "warp_drive"}) == 2);
    }
    SUBCASE("malformed --set exits 2") {
        CHECK(run_argv({"voi", "run", "ashp", "--set", "novalue"}) == 2);
    }
    SUBCASE("unknown flag exits 2") {
        CHECK(run_argv({"voi", "run", "ashp", "--frobnicate"}) == 2);
    }
    SUBCASE("overrides flow through") {
        CHECK(run_argv({"voi", "run", "ventilation", "--samples", "2000",
                        "--set", "quanta_rate=20", "--output", out.c_str()}) == 0);
        const auto doc = nlohmann::json::parse(slurp(out));
        CHECK(doc.at("parameters").at("quanta_rate") == 20.0);
    }
}
