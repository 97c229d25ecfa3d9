#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lqg {

enum class VerdictRule {
    AbsoluteTolerance,  // |estimate - target| <= tolerance
    RelativeTolerance,  // |estimate - target| <= tolerance * |target|
    PValueAbove,        // estimate is a p-value that must exceed tolerance
    PValueBelow,        // estimate is a p-value that must stay below tolerance
    Predicate           // verdict decided by the producer
};

struct LawReport {
    std::string name;
    std::map<std::string, double> params;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double std_error = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> target;
    double tolerance = 0.0;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    VerdictRule rule = VerdictRule::AbsoluteTolerance;
    bool pass = false;
    double runtime_ms = 0.0;
    std::map<std::string, double> extras;
    std::string note;

    // Sets `pass` from the rule (Predicate reports keep the producer's verdict).
    void decide();
};

// Columns of numbers emitted next to a report (samples, fitted curves, density overlays).
struct PlotData {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

nlohmann::json to_json(const LawReport& r);
std::string_view to_string(VerdictRule rule);

}  // namespace lqg
