// pseudobath: command-line front end for the pseudomode bath library.
//
// Exit codes: 0 success, 1 invalid scenario or usage, 2 numeric failure, 3 I/O failure.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "pseudobath/cli_runner.hpp"
#include "pseudobath/errors.hpp"

namespace {

using nlohmann::json;
namespace pb = pseudobath;

json read_scenario(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw pb::ConfigError("cannot open scenario file '" + path + "'");
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw pb::ConfigError("scenario file '" + path + "' is not valid JSON: " + e.what());
    }
}

void print_report(const pb::ValidationReport& rep)
{
    std::cout << (rep.valid ? "valid" : "invalid") << '\n';
    for (const auto& e : rep.errors) std::cout << "error: " << e << '\n';
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << '\n';
    if (rep.recurrence_horizon > 0.0) std::cout << "recurrence_horizon: " << rep.recurrence_horizon << '\n';
    if (rep.memory_estimate_bytes > 0)
        std::cout << "memory_estimate_mib: " << (rep.memory_estimate_bytes + (1u << 20) - 1) / (1u << 20) << '\n';
}

int run_one(const json& scenario, const std::string& out)
{
    const auto res = pb::run_scenario(scenario, out);
    for (const auto& f : res.outputs) std::cout << f.string() << '\n';
    for (const auto& w : res.manifest_json["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pseudomode bath correlation functions, spectral densities and occupation dynamics"};
    app.set_version_flag("--version", pb::library_version());
    app.require_subcommand(1);

    std::string scenario_path, out_dir = ".", preset_name;
    bool as_json = false, print_only = false;

    auto* run = app.add_subcommand("run", "Run a JSON scenario");
    run->add_option("scenario", scenario_path, "Scenario file")->required();
    run->add_option("--out", out_dir, "Output directory");

    auto* validate = app.add_subcommand("validate", "Dry-run check of a JSON scenario");
    validate->add_option("scenario", scenario_path, "Scenario file")->required();
    validate->add_flag("--json", as_json, "Print the report as JSON");

    auto* preset = app.add_subcommand("preset", "Run a built-in figure preset");
    preset->add_option("name", preset_name, "Preset name (--list to show)");
    preset->add_option("--out", out_dir, "Output directory");
    preset->add_flag("--print", print_only, "Print the preset scenario(s) instead of running");
    bool list = false;
    preset->add_flag("--list", list, "List presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto rep = pb::validate_scenario(read_scenario(scenario_path));
            if (as_json) std::cout << rep.to_json().dump(2) << '\n';
            else print_report(rep);
            return rep.valid ? 0 : 1;
        }
        if (*run) return run_one(read_scenario(scenario_path), out_dir);
        if (list) {
            for (const auto& n : pb::preset_names()) std::cout << n << ": " << pb::get_preset(n).description << '\n';
            return 0;
        }
        if (preset_name.empty()) throw pb::ConfigError("preset: a name is required (see --list)");
        const auto p = pb::get_preset(preset_name);
        if (print_only) {
            for (const auto& s : p.scenarios) std::cout << s.dump(2) << '\n';
            return 0;
        }
        std::cerr << p.name << ": " << p.description << '\n';
        for (const auto& s : p.scenarios) run_one(s, out_dir);
        return 0;
    } catch (const pb::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const pb::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const pb::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 3;
    }
}
