// Command-line scenario runner.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "coho/scenario.hpp"

namespace fs = std::filesystem;

namespace {

int run_command(const std::string& target, std::uint64_t seed, bool seed_set, int threads,
                const std::string& out_dir) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();

    coho::ScenarioResult result;
    bool is_gallery_name = false;
    for (const auto& [name, _] : coho::list_gallery())
        if (name == target) is_gallery_name = true;

    try {
        if (is_gallery_name) {
            coho::ScenarioParams params;
            result = coho::run_gallery_scenario(target, params,
                                                seed_set ? seed : 20240927u, threads);
        } else {
            result = coho::run_scenario_file(target, seed, seed_set, threads);
        }
    } catch (const coho::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const coho::UnknownScenario& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    auto t1 = clock::now();
    double wall = std::chrono::duration<double>(t1 - t0).count();

    fs::create_directories(out_dir);
    std::string report = coho::report_to_json(result, seed_set ? seed : 20240927u, threads);
    {
        std::ofstream out(fs::path(out_dir) / (result.name + ".report.json"));
        out << report;
    }
    for (const auto& [fname, content] : result.side_files) {
        std::ofstream out(fs::path(out_dir) / (result.name + "." + fname));
        out << content;
    }
    {
        // wall-clock timings live outside the deterministic report
        std::ofstream out(fs::path(out_dir) / (result.name + ".timings.csv"));
        out << "scenario,threads,wall_seconds\n"
            << result.name << ',' << threads << ',' << wall << "\n";
    }

    for (const auto& c : result.checks)
        std::cout << (c.pass ? "PASS" : "FAIL") << "  " << result.name << "." << c.name
                  << "  value=" << c.value << "  " << c.comparison
                  << "  threshold=" << c.threshold << "\n";
    std::cout << (result.passed() ? "OK" : "CHECK FAILURES") << "  report: "
              << (fs::path(out_dir) / (result.name + ".report.json")).string() << "\n";
    return result.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coho: a numerical laboratory for linear cocycles over hyperbolic systems"};
    app.require_subcommand(1);

    std::string target, out_dir = "out", report_path;
    std::uint64_t seed = 20240927u;
    int threads = 1;
    bool pretty = false;

    auto* run = app.add_subcommand("run", "run a scenario config file or gallery name");
    run->add_option("target", target, "scenario .cfg path or gallery scenario name")
        ->required();
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--threads", threads, "worker threads (output is thread-count independent)");
    run->add_option("--out-dir", out_dir, "directory for reports and CSV side files");

    auto* gallery = app.add_subcommand("gallery", "list built-in scenarios");

    auto* report = app.add_subcommand("report", "print a report file");
    report->add_option("file", report_path, "report JSON path")->required();
    report->add_flag("--pretty", pretty, "re-indent");

    CLI11_PARSE(app, argc, argv);

    if (gallery->parsed()) {
        for (const auto& [name, desc] : coho::list_gallery())
            std::cout << name << "  -  " << desc << "\n";
        return 0;
    }
    if (report->parsed()) {
        std::ifstream in(report_path);
        if (!in) {
            std::cerr << "cannot open " << report_path << "\n";
            return 2;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        if (!pretty) {
            std::cout << buf.str();
            return 0;
        }
        try {
            auto j = nlohmann::ordered_json::parse(buf.str());
            std::cout << j.dump(2) << "\n";
        } catch (const std::exception& e) {
            std::cerr << "bad report JSON: " << e.what() << "\n";
            return 2;
        }
        return 0;
    }
    bool seed_set = run->count("--seed") > 0;
    return run_command(target, seed, seed_set, threads, out_dir);
}
