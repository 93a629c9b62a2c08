// urbanflow command-line driver: validate, run, compare, report.

#include <CLI11.hpp>

#include <charconv>
#include <iostream>
#include <optional>
#include <string>

#include "urbanflow/error.hpp"
#include "urbanflow/pipeline.hpp"
#include "urbanflow/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kStageFailure = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> years;
    std::optional<unsigned> threads;
    std::optional<double> gap_tol;
};

int parse_int(const std::string& s) {
    int v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) throw urbanflow::ConfigError("bad year '" + s + "'");
    return v;
}

// --years N (N years from start_year) or --years A-B.
void apply_years(urbanflow::RunSettings& s, const std::string& spec) {
    if (const auto dash = spec.find('-'); dash != std::string::npos) {
        s.start_year = parse_int(spec.substr(0, dash));
        s.end_year = parse_int(spec.substr(dash + 1));
    } else {
        const int n = parse_int(spec);
        if (n < 1) throw urbanflow::ConfigError("--years needs at least one year");
        s.end_year = s.start_year + n - 1;
    }
    if (s.end_year < s.start_year) throw urbanflow::ConfigError("--years: end year precedes start year");
}

urbanflow::ScenarioBundle load(const std::string& config, const Overrides& o) {
    auto bundle = urbanflow::load_scenario(config);
    auto& s = bundle.settings;
    if (o.seed) s.global_seed = *o.seed;
    if (o.years) apply_years(s, *o.years);
    if (o.threads) {
        if (*o.threads < 1) throw urbanflow::ConfigError("--threads must be >= 1");
        s.threads = *o.threads;
    }
    if (o.gap_tol) {
        if (!(*o.gap_tol > 0.0)) throw urbanflow::ConfigError("--gap-tol must be > 0");
        s.assignment.gap_tol = *o.gap_tol;
    }
    urbanflow::validate_bundle(bundle);
    return bundle;
}

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "Global random seed");
    cmd->add_option("--years", o.years, "Number of years from start_year, or START-END");
    cmd->add_option("--threads", o.threads, "Worker threads");
    cmd->add_option("--gap-tol", o.gap_tol, "Relative gap tolerance of the assignment");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integrated land use, activity demand and traffic assignment pipeline"};
    app.require_subcommand(1);

    std::string config, manifest_a, manifest_b, out_dir = "out", output = "comparison.csv";
    Overrides overrides;

    auto* validate = app.add_subcommand("validate", "Load and check a scenario without running it");
    validate->add_option("config", config, "Scenario config file")->required();
    add_overrides(validate, overrides);

    auto* run = app.add_subcommand("run", "Run the annual loop of a scenario");
    run->add_option("config", config, "Scenario config file")->required();
    run->add_option("--out-dir", out_dir, "Output root directory");
    add_overrides(run, overrides);

    auto* compare = app.add_subcommand("compare", "Per-year deltas between two runs");
    compare->add_option("manifest_a", manifest_a, "Manifest of the base run")->required();
    compare->add_option("manifest_b", manifest_b, "Manifest of the alternative run")->required();
    compare->add_option("-o,--output", output, "CSV to write");

    auto* report = app.add_subcommand("report", "Summarize a run");
    report->add_option("manifest", manifest_a, "Run manifest")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*validate) {
            const auto bundle = load(config, overrides);
            std::cout << "ok: " << bundle.zones.size() << " zones, " << bundle.network.links.size() << " links, "
                      << bundle.population.households.size() << " households, " << bundle.population.jobs.size()
                      << " jobs, years " << bundle.settings.start_year << "-" << bundle.settings.end_year << "\n";
        } else if (*run) {
            const auto bundle = load(config, overrides);
            const auto m = urbanflow::pipeline::run_scenario(bundle, out_dir);
            const auto manifest = std::filesystem::path(out_dir) / m.scenario / "manifest.txt";
            std::cout << "wrote " << manifest.string() << "\n";
            std::cout << urbanflow::pipeline::report(manifest);
        } else if (*compare) {
            const auto rows = urbanflow::pipeline::compare_scenarios(manifest_a, manifest_b);
            urbanflow::pipeline::write_comparison(output, rows);
            std::cout << "wrote " << rows.size() << " rows to " << output << "\n";
        } else if (*report) {
            std::cout << urbanflow::pipeline::report(manifest_a);
        }
    } catch (const urbanflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const urbanflow::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const urbanflow::StageError& e) {
        std::cerr << "stage failure: " << e.what() << "\n";
        return kStageFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kStageFailure;
    }
    return kOk;
}
