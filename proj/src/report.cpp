#include "lqglab/report.hpp"

#include <cmath>

namespace lqg {

void LawReport::decide() {
    const bool finite = std::isfinite(estimate);
    switch (rule) {
        case VerdictRule::AbsoluteTolerance:
            pass = finite && target && std::abs(estimate - *target) <= tolerance;
            break;
        case VerdictRule::RelativeTolerance:
            pass = finite && target && std::abs(estimate - *target) <= tolerance * std::abs(*target);
            break;
        case VerdictRule::PValueAbove:
            pass = finite && estimate > tolerance;
            break;
        case VerdictRule::PValueBelow:
            pass = finite && estimate < tolerance;
            break;
        case VerdictRule::Predicate:
            break;
    }
}

std::string_view to_string(VerdictRule rule) {
    switch (rule) {
        case VerdictRule::AbsoluteTolerance: return "abs_tolerance";
        case VerdictRule::RelativeTolerance: return "rel_tolerance";
        case VerdictRule::PValueAbove: return "p_value_above";
        case VerdictRule::PValueBelow: return "p_value_below";
        case VerdictRule::Predicate: return "predicate";
    }
    return "predicate";
}

namespace {

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

nlohmann::json to_json(const LawReport& r) {
    nlohmann::json j;
    j["name"] = r.name;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : r.params) params[k] = number(v);
    j["params"] = params;
    j["estimate"] = number(r.estimate);
    j["stderr"] = number(r.std_error);
    j["target"] = r.target ? number(*r.target) : nlohmann::json("none");
    j["tolerance"] = number(r.tolerance);
    j["rule"] = std::string(to_string(r.rule));
    j["n"] = r.n;
    j["seed"] = r.seed;
    j["verdict"] = r.pass ? "pass" : "fail";
    j["runtime_ms"] = r.runtime_ms;
    nlohmann::json extras = nlohmann::json::object();
    for (const auto& [k, v] : r.extras) extras[k] = number(v);
    j["extras"] = extras;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

}  // namespace lqg
