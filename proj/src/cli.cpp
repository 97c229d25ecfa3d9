#include "lqglab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "lqglab/beaded.hpp"
#include "lqglab/cone.hpp"
#include "lqglab/errors.hpp"
#include "lqglab/laws.hpp"
#include "lqglab/parallel.hpp"
#include "lqglab/sle.hpp"

namespace lqg::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
    if (pos != v.size() || !std::isfinite(x)) throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' is out of range: '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    const std::uint64_t x = to_u64(key, v);
    if (x > 1u << 30) throw ConfigError("'" + key + "' is out of range: '" + v + "'");
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

double W_or(const CheckContext& c, double fallback) { return c.W.value_or(fallback); }

// Weight from the config list that fits the regime (thin: W < gamma^2/2).
std::optional<double> pick_weight(const RunConfig& c, double gamma, bool thin) {
    for (double w : c.weights)
        if (thin ? (w > 0.0 && w < gamma * gamma / 2.0) : (w > gamma * gamma / 2.0)) return w;
    return std::nullopt;
}

enum class Regime { None, Thin, Thick };

struct Entry {
    CheckInfo info;
    Regime regime = Regime::None;
};

std::vector<Entry> build_registry() {
    std::vector<Entry> r;
    auto add = [&](std::string name, std::string citation, std::string description, double tol, std::uint64_t n,
                   Regime regime, std::function<LawReport(const CheckContext&)> f) {
        r.push_back({CheckInfo{std::move(name), std::move(citation), std::move(description), tol, n, std::move(f)},
                     regime});
    };

    add("cone_kernel_ratio",
        "cone excursion kernel (l r)^{4/g^2-1} / (l^{4/g^2} + r^{4/g^2})^2; K(2,1)/K(1,1) = 8/25 at gamma = sqrt2",
        "Monte Carlo exit-window ratio of correlated Brownian motion in the quadrant, Richardson pair in the window",
        0.03, 10'000'000, Regime::None, [](const CheckContext& c) {
            cone::KernelRatioOptions o;
            o.exit.workers = c.workers;
            LawReport rep = cone::cone_kernel_ratio_check(c.gamma, c.n, c.seed, o);
            if (c.tolerance) {
                rep.tolerance = *c.tolerance;
                rep.decide();
            }
            return rep;
        });
    add("corner_exit_exponent",
        "corner exit probability of the cone Brownian motion scales as eps^{4/g^2}",
        "log-log slope of P(exit within eps of the apex) over three eps values", 0.1, 10'000'000, Regime::None,
        [](const CheckContext& c) {
            cone::CornerOptions o;
            o.exit.workers = c.workers;
            if (c.tolerance) o.tolerance = *c.tolerance;
            return cone::corner_exit_exponent_check(c.gamma, c.n, c.seed, o, c.plots);
        });
    add("mot_cov",
        "mating-of-trees covariance: Var L_t = Var R_t = a^2 t, Corr(L_t, R_t) = -cos(pi g^2/4), a^2 = 2/sin(pi g^2/4)",
        "empirical covariance of sampled Brownian increments", 0.02, 1'000'000, Regime::None,
        [](const CheckContext& c) { return laws::mot_cov_check(c.gamma, std::nullopt, 1e-3, c.n, c.seed); });
    add("subordinator_alpha",
        "left boundary lengths of a thin quantum disk accumulate as a stable subordinator of index 1 - 2W/g^2",
        "slope of log Phi(lambda) vs log lambda after two-cutoff extrapolation", 0.03, 100'000, Regime::Thin,
        [](const CheckContext& c) {
            beaded::LaplaceOptions o;
            o.workers = c.workers;
            if (c.tolerance) o.tolerance = *c.tolerance;
            return beaded::subordinator_exponent_check(W_or(c, 0.5), c.gamma, c.n, c.seed, o, c.plots);
        });
    add("boundary_exponent",
        "thick quantum disk boundary length has density proportional to L^{-2W/g^2} dL",
        "weighted log-log tail fit of total boundary length of sampled disks", 0.1, 10'000, Regime::Thick,
        [](const CheckContext& c) {
            laws::BoundaryExponentOptions o;
            o.nx = c.nx;
            o.ny = c.ny;
            o.workers = c.workers;
            if (c.tolerance) o.tolerance = *c.tolerance;
            return laws::boundary_exponent_check(c.gamma, W_or(c, 2.0), c.n, c.seed, o, c.plots);
        });
    add("scaling_invariance",
        "adding (2/g) log lambda to the field multiplies boundary masses by lambda and area masses by lambda^2",
        "per-sample relative error of the rescaled GMC masses on all four surface kinds", 1e-12, 16, Regime::Thick,
        [](const CheckContext& c) {
            return laws::scaling_invariance_check(c.gamma, W_or(c, 2.0), 3.7, c.n, c.seed);
        });
    add("f_density_oracle",
        "trimmed bead length density f_{l,delta}(x) in closed form vs its defining integral "
        "int x^{-p} y^{p-2} (l-x-y)^{-p} dy",
        "maximum relative error of the closed form against quadrature on a grid of points", 1e-8, 1000, Regime::Thin,
        [](const CheckContext& c) { return laws::f_density_oracle_check(W_or(c, 0.5), c.gamma, 1.0, 0.1, c.n); });
    add("trimmed_length_ks",
        "delta-trimmed left length of a length-l bead chain has density f_{l,delta}",
        "weighted KS test of trimmed chain lengths against the closed form", 0.01, 100'000, Regime::Thin,
        [](const CheckContext& c) {
            beaded::TrimmedLengthOptions o;
            o.workers = c.workers;
            return laws::trimmed_length_ks_check(W_or(c, 0.5), c.gamma, 1.0, 0.1, c.n, c.seed, o, c.plots);
        });
    add("decomposition_equivalence",
        "cut-mass-T bead chain: marking a bead by length equals splitting at a uniform point with a size-biased "
        "insert",
        "two-sample KS between the two procedures", 0.01, 100'000, Regime::Thin, [](const CheckContext& c) {
            beaded::DecompositionOptions o;
            o.workers = c.workers;
            return beaded::decomposition_equivalence_test(W_or(c, 0.5), c.gamma, 1.0, c.n, c.seed, o, c.plots);
        });
    add("decomposition_control",
        "negative control for the cut-mass-T decomposition: an unbiased insert must be rejected",
        "two-sample KS with the size bias removed; passes when p < 1e-3", 1e-3, 100'000, Regime::Thin,
        [](const CheckContext& c) {
            beaded::DecompositionOptions o;
            o.workers = c.workers;
            o.unbiased_insert = true;
            return beaded::decomposition_equivalence_test(W_or(c, 0.5), c.gamma, 1.0, c.n, c.seed, o, c.plots);
        });
    add("weight2_remarking",
        "weight-2 quantum disk boundary lengths have joint law (l + r)^{-4/g^2 - 1} dl dr",
        "re-marking construction: KS of l, uniform split ratio and log-log slope of l + r", 0.01, 100'000,
        Regime::None,
        [](const CheckContext& c) { return laws::weight2_remarking_check(c.gamma, {1.0, 10.0}, c.n, c.seed, c.plots); });
    add("gamma2half_grid",
        "weight g^2/2 quantum disk boundary lengths have joint law (l r)^{4/g^2-1} / (l^{4/g^2} + r^{4/g^2})^2",
        "Monte Carlo cone kernel on the (l, r) grid {1,2,3} x {1,2}, ratios to (1,1)", 0.1, 10'000'000,
        Regime::None, [](const CheckContext& c) {
            laws::GridCheckOptions o;
            o.exit.workers = c.workers;
            if (c.tolerance) o.tolerance = *c.tolerance;
            return laws::gamma2half_grid_check(c.gamma, c.n, c.seed, o, c.plots);
        });
    add("window_mass",
        "mass of the thick disk constant law on c > -zeta is (2W/g^2 - 1)^{-1} e^{(Q - beta) zeta}",
        "recorded sampler window mass vs closed form", 1e-12, 1, Regime::Thick,
        [](const CheckContext& c) { return laws::window_mass_check(W_or(c, 2.0), c.gamma, 1.0, c.seed); });
    add("sle_hitting",
        "SLE_kappa(rho-; rho+) hits the left boundary iff rho- < kappa/2 - 2",
        "left-hit fraction over rho- in {-1.8, -1.5, -1, -0.5, 0.5}: monotone, crossing 1/2 near kappa/2 - 2", 0.3,
        500, Regime::None, [](const CheckContext& c) {
            sle::PhaseOptions o;
            o.hit.workers = c.workers;
            if (c.tolerance) o.tolerance = *c.tolerance;
            return sle::hitting_phase_check(c.gamma * c.gamma, c.n, 1e-2, c.seed, o, c.plots);
        });
    return r;
}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> e = build_registry();
    return e;
}

const Entry& find_entry(const std::string& name) {
    for (const auto& e : entries())
        if (e.info.name == name) return e;
    throw ConfigError("unknown check '" + name + "' (see list-checks)");
}

bool known_override(const std::string& key) {
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) return false;
    const std::string check = key.substr(0, dot), field = key.substr(dot + 1);
    find_entry(check);
    return field == "n" || field == "W" || field == "gamma" || field == "tolerance";
}

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out << text;
    out.close();
    if (!out) throw IoError("write to '" + p.string() + "' failed");
}

}  // namespace

void RunConfig::validate() const {
    if (!seed) throw ConfigError("'seed' is mandatory");
    if (!(gamma > 0.0 && gamma < 2.0)) throw ConfigError("gamma must lie in (0, 2)");
    for (double w : weights)
        if (!(w > 0.0)) throw ConfigError("weights must be positive");
    if (nx < 2 || ny < 2) throw ConfigError("grid needs nx, ny >= 2");
    if (workers < 0 || parallel_checks < 1) throw ConfigError("workers >= 0 and parallel_checks >= 1 required");
    for (const auto& name : suite) find_entry(name);
    for (const auto& [key, value] : overrides) {
        if (!known_override(key)) throw ConfigError("unknown setting '" + key + "'");
        const std::string field = key.substr(key.rfind('.') + 1);
        if (field == "gamma" && !(value > 0.0 && value < 2.0)) throw ConfigError("'" + key + "' must lie in (0, 2)");
        if ((field == "W" || field == "tolerance") && !(value > 0.0))
            throw ConfigError("'" + key + "' must be positive");
        if (field == "n" && !(value >= 1.0 && value == std::floor(value)))
            throw ConfigError("'" + key + "' must be a positive integer");
    }
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key), v = trim(raw_value);
    if (key == "gamma") {
        c.gamma = to_double(key, v);
    } else if (key == "weights") {
        c.weights.clear();
        for (const auto& item : split_list(v)) c.weights.push_back(to_double(key, item));
    } else if (key == "nx") {
        c.nx = to_int(key, v);
    } else if (key == "ny") {
        c.ny = to_int(key, v);
    } else if (key == "grid") {
        const auto x = v.find('x');
        if (x == std::string::npos) throw ConfigError("'grid' expects NXxNY, got '" + v + "'");
        c.nx = to_int(key, trim(v.substr(0, x)));
        c.ny = to_int(key, trim(v.substr(x + 1)));
    } else if (key == "n_samples") {
        c.n_samples = to_u64(key, v);
    } else if (key == "seed") {
        c.seed = to_u64(key, v);
    } else if (key == "workers") {
        c.workers = to_int(key, v);
    } else if (key == "parallel_checks") {
        c.parallel_checks = to_int(key, v);
    } else if (key == "output_dir") {
        if (v.empty()) throw ConfigError("'output_dir' must not be empty");
        c.output_dir = v;
    } else if (key == "suite") {
        c.suite = split_list(v);
    } else if (key == "gnuplot") {
        c.gnuplot = to_bool(key, v);
    } else if (known_override(key)) {
        c.overrides[key] = to_double(key, v);
    } else {
        throw ConfigError("unknown setting '" + key + "'");
    }
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        try {
            apply_setting(c, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["format"] = kConfigFormat;
    j["gamma"] = c.gamma;
    j["weights"] = c.weights;
    j["nx"] = c.nx;
    j["ny"] = c.ny;
    j["n_samples"] = c.n_samples;
    j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json();
    j["workers"] = c.workers;
    j["parallel_checks"] = c.parallel_checks;
    j["output_dir"] = c.output_dir.string();
    j["suite"] = c.suite;
    j["gnuplot"] = c.gnuplot;
    j["overrides"] = c.overrides;
    return j;
}

const std::vector<CheckInfo>& registry() {
    static const std::vector<CheckInfo> infos = [] {
        std::vector<CheckInfo> v;
        for (const auto& e : entries()) v.push_back(e.info);
        return v;
    }();
    return infos;
}

const CheckInfo& find_check(const std::string& name) { return find_entry(name).info; }

std::uint64_t check_seed(std::uint64_t master, const std::string& name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : name) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return mix64(master ^ h);
}

CheckOutcome run_check(const RunConfig& c, const std::string& name) {
    c.validate();
    const Entry& e = find_entry(name);
    auto over = [&](const std::string& field) -> std::optional<double> {
        const auto it = c.overrides.find(name + "." + field);
        if (it == c.overrides.end()) return std::nullopt;
        return it->second;
    };
    CheckOutcome out;
    out.citation = e.info.citation;
    CheckContext ctx;
    ctx.gamma = over("gamma").value_or(c.gamma);
    ctx.W = over("W");
    if (!ctx.W && e.regime != Regime::None) ctx.W = pick_weight(c, ctx.gamma, e.regime == Regime::Thin);
    if (const auto n = over("n")) {
        ctx.n = static_cast<std::uint64_t>(*n);
    } else {
        ctx.n = c.n_samples > 0 ? c.n_samples : e.info.default_n;
    }
    ctx.seed = check_seed(*c.seed, name);
    ctx.workers = c.workers;
    ctx.nx = c.nx;
    ctx.ny = c.ny;
    ctx.tolerance = over("tolerance");
    ctx.plots = &out.plots;
    const auto start = std::chrono::steady_clock::now();
    try {
        out.report = e.info.run(ctx);
    } catch (const ParameterError& err) {
        throw ConfigError("check '" + name + "': " + err.what());
    } catch (const NoClosedFormError& err) {
        throw ConfigError("check '" + name + "': " + err.what());
    } catch (const NonNormalizableError& err) {
        throw ConfigError("check '" + name + "': " + err.what());
    } catch (const std::exception& err) {
        out.report = LawReport{};
        out.report.name = name;
        out.report.n = ctx.n;
        out.report.seed = ctx.seed;
        out.report.tolerance = e.info.default_tolerance;
        out.report.pass = false;
        out.report.note = std::string("error: ") + err.what();
        out.plots.clear();
    }
    out.report.name = name;
    if (out.report.runtime_ms == 0.0)
        out.report.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

bool RunManifest::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& o) { return o.report.pass; });
}

RunManifest execute(const RunConfig& c) {
    c.validate();
    RunManifest m;
    m.config = config_to_json(c);
    m.started = utc_now();
    m.checks = parallel_map(c.suite.size(), static_cast<unsigned>(c.parallel_checks),
                            [&](std::size_t i) { return run_check(c, c.suite[i]); });
    m.finished = utc_now();
    return m;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["format"] = kManifestFormat;
    j["tool"] = "lqglab";
    j["version"] = kVersion;
    j["config"] = m.config;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["all_pass"] = m.all_pass();
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& o : m.checks) {
        nlohmann::json r = to_json(o.report);
        r["citation"] = o.citation;
        nlohmann::json files = nlohmann::json::array();
        for (const auto& p : o.plots) files.push_back(o.report.name + "/" + p.name + ".csv");
        r["files"] = files;
        checks.push_back(std::move(r));
    }
    j["checks"] = checks;
    return j;
}

std::string csv_text(const PlotData& d) {
    std::string s;
    for (std::size_t k = 0; k < d.columns.size(); ++k) s += (k ? "," : "") + d.columns[k];
    s += '\n';
    for (const auto& row : d.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) s += (k ? "," : "") + format_number(row[k]);
        s += '\n';
    }
    return s;
}

std::string gnuplot_script(const RunManifest& m) {
    std::string s = "# lqglab plot script; run with: gnuplot -p plots.gp\nset datafile separator ','\nset key autotitle columnhead\n";
    for (const auto& o : m.checks) {
        for (const auto& p : o.plots) {
            if (p.columns.size() < 2) continue;
            const std::string file = o.report.name + "/" + p.name + ".csv";
            const bool loglog = p.name == "loglog_density" || p.name == "total_length_density" ||
                                p.name == "corner_exit" || p.name == "laplace_exponent";
            s += "\nset title '" + o.report.name + ": " + p.name + "'\n";
            s += loglog ? "set logscale xy\n" : "unset logscale\n";
            s += "plot '" + file + "' using 1:2 with points";
            for (std::size_t k = 2; k < p.columns.size(); ++k)
                s += ", '' using 1:" + std::to_string(k + 1) + " with lines";
            s += "\n";
        }
    }
    return s;
}

std::filesystem::path write_outputs(const RunManifest& m, const RunConfig& c) {
    std::error_code ec;
    std::filesystem::create_directories(c.output_dir, ec);
    if (ec || !std::filesystem::is_directory(c.output_dir))
        throw IoError("cannot create output directory '" + c.output_dir.string() + "'");
    for (const auto& o : m.checks) {
        if (o.plots.empty()) continue;
        const auto dir = c.output_dir / o.report.name;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create '" + dir.string() + "'");
        for (const auto& p : o.plots) write_file(dir / (p.name + ".csv"), csv_text(p));
    }
    if (c.gnuplot) write_file(c.output_dir / "plots.gp", gnuplot_script(m));
    const auto path = c.output_dir / "manifest.json";
    write_file(path, manifest_to_json(m).dump(2) + "\n");
    return path;
}

RunManifest run(const RunConfig& c) {
    c.validate();
    std::error_code ec;
    std::filesystem::create_directories(c.output_dir, ec);
    if (ec || !std::filesystem::is_directory(c.output_dir))
        throw IoError("cannot create output directory '" + c.output_dir.string() + "'");
    RunManifest m = execute(c);
    write_outputs(m, c);
    return m;
}

}  // namespace lqg::cli
