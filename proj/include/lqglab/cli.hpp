#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lqglab/report.hpp"

namespace lqg::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kConfigFormat = 1;
inline constexpr int kManifestFormat = 1;
inline constexpr int kCsvFormat = 1;

// Malformed configuration: unknown key or check, bad value, missing seed.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Output directory or file could not be written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    double gamma = 1.4142135623730951;
    std::vector<double> weights;
    int nx = 512;
    int ny = 32;
    std::uint64_t n_samples = 0;  // 0: each check's default size
    std::optional<std::uint64_t> seed;
    int workers = 0;          // 0: LQGLAB_WORKERS or hardware concurrency
    int parallel_checks = 1;  // checks run concurrently
    std::filesystem::path output_dir = "lqglab_out";
    std::vector<std::string> suite;
    bool gnuplot = false;
    // "<check>.<key>" overrides: n, W, gamma, tolerance.
    std::map<std::string, double> overrides;

    void validate() const;
};

// Applies one "key = value" assignment.
void apply_setting(RunConfig& c, const std::string& key, const std::string& value);

// Parses a key-value file: one assignment per line, '#' starts a comment, lists are comma separated.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json config_to_json(const RunConfig& c);

struct CheckContext {
    double gamma = 0.0;
    std::optional<double> W;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    int workers = 0;
    int nx = 0;
    int ny = 0;
    std::optional<double> tolerance;
    std::vector<PlotData>* plots = nullptr;
};

struct CheckInfo {
    std::string name;
    std::string citation;
    std::string description;
    double default_tolerance = 0.0;
    std::uint64_t default_n = 0;
    std::function<LawReport(const CheckContext&)> run;
};

const std::vector<CheckInfo>& registry();
const CheckInfo& find_check(const std::string& name);

// Per-check seed: depends on the master seed and the check name only.
std::uint64_t check_seed(std::uint64_t master, const std::string& name);

struct CheckOutcome {
    LawReport report;
    std::vector<PlotData> plots;
    std::string citation;
};

struct RunManifest {
    nlohmann::json config;
    std::vector<CheckOutcome> checks;
    std::string started;
    std::string finished;

    bool all_pass() const;
};

CheckOutcome run_check(const RunConfig& c, const std::string& name);

// Runs the suite (results in suite order) without touching the filesystem.
RunManifest execute(const RunConfig& c);

nlohmann::json manifest_to_json(const RunManifest& m);

// Writes manifest.json, <check>/<plot>.csv and optionally plots.gp; returns the manifest path.
std::filesystem::path write_outputs(const RunManifest& m, const RunConfig& c);

// execute + write_outputs.
RunManifest run(const RunConfig& c);

std::string csv_text(const PlotData& d);
std::string gnuplot_script(const RunManifest& m);

}  // namespace lqg::cli
