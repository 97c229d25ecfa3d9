// lqglab: run verification checks and dump raw samples.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lqglab/beaded.hpp"
#include "lqglab/cli.hpp"
#include "lqglab/cone.hpp"
#include "lqglab/errors.hpp"
#include "lqglab/field.hpp"
#include "lqglab/sle.hpp"

namespace {

using lqg::PlotData;

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

void emit(const PlotData& d, const std::vector<std::string>& header, const std::string& out) {
    std::string text;
    for (const auto& line : header) text += "# " + line + "\n";
    text += lqg::cli::csv_text(d);
    if (out.empty() || out == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw lqg::cli::IoError("cannot open '" + out + "' for writing");
    f << text;
    if (!f) throw lqg::cli::IoError("write to '" + out + "' failed");
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lqglab: Monte Carlo checks for LQG surfaces, bead chains, SLE and cone Brownian motion"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run a suite of checks and write manifest.json plus CSV plot data");
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed_flag;
    std::optional<int> workers_flag;
    std::string suite_flag, out_flag;
    bool gnuplot_flag = false;
    run->add_option("-c,--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    run->add_option("--set", sets, "override one setting, e.g. --set gamma=1.7")->take_all();
    run->add_option("--seed", seed_flag, "master seed");
    run->add_option("--workers", workers_flag, "worker threads per check (0: LQGLAB_WORKERS or all cores)");
    run->add_option("--suite", suite_flag, "comma-separated check names");
    run->add_option("-o,--output-dir", out_flag, "output directory");
    run->add_flag("--gnuplot", gnuplot_flag, "also write plots.gp");

    auto* list = app.add_subcommand("list-checks", "List registered checks with citation and default tolerance");
    bool list_json = false;
    list->add_flag("--json", list_json, "print as JSON");

    auto* version = app.add_subcommand("version", "Print tool and file-format versions");

    // sample
    auto* sample = app.add_subcommand("sample", "Dump raw samples as CSV");
    sample->require_subcommand(1);
    std::string out_path;
    std::uint64_t sample_seed = 0;
    double gamma = 1.4142135623730951;

    auto* s_field = sample->add_subcommand("field", "Field cell values h(i, j) of a sampled surface");
    std::string kind = "disk";
    double W = 2.0, c_lo = 0.0;
    int nx = 512, ny = 32;
    s_field->add_option("--kind", kind, "disk, wedge, sphere or cone")->capture_default_str();
    s_field->add_option("--W", W, "weight")->capture_default_str();
    s_field->add_option("--nx", nx)->capture_default_str();
    s_field->add_option("--ny", ny)->capture_default_str();
    s_field->add_option("--c-min", c_lo, "lower end of the constant window (disk, sphere)")->capture_default_str();

    auto* s_chain = sample->add_subcommand("chain", "Bead chain of a thin disk: labels and left lengths");
    double chain_W = 0.5, T = 1.0, cutoff = 1e-6;
    s_chain->add_option("--W", chain_W, "weight, below gamma^2/2")->capture_default_str();
    s_chain->add_option("--T", T, "label range")->capture_default_str();
    s_chain->add_option("--cutoff", cutoff, "smallest bead length kept")->capture_default_str();

    auto* s_curve = sample->add_subcommand("curve", "Traced SLE_kappa(rho-; rho+) curve");
    double kappa = 2.0, rho_m = 0.0, rho_p = 0.0, dt = 1e-5;
    std::size_t steps = 100000;
    bool driving_only = false;
    s_curve->add_option("--kappa", kappa)->capture_default_str();
    s_curve->add_option("--rho-minus", rho_m)->capture_default_str();
    s_curve->add_option("--rho-plus", rho_p)->capture_default_str();
    s_curve->add_option("--steps", steps)->capture_default_str();
    s_curve->add_option("--dt", dt)->capture_default_str();
    s_curve->add_flag("--driving", driving_only, "dump the driving process instead of the curve");

    auto* s_cone = sample->add_subcommand("cone-path", "Correlated Brownian path until it leaves the quadrant");
    double L0 = 1.0, R0 = 1.0, cone_dt = 1e-5;
    std::size_t max_steps = 1u << 22;
    s_cone->add_option("--L", L0)->capture_default_str();
    s_cone->add_option("--R", R0)->capture_default_str();
    s_cone->add_option("--dt", cone_dt)->capture_default_str();
    s_cone->add_option("--max-steps", max_steps)->capture_default_str();

    for (auto* s : {s_field, s_chain, s_curve, s_cone}) {
        s->add_option("--seed", sample_seed, "seed")->required();
        s->add_option("-o,--out", out_path, "output file (default stdout)");
    }
    for (auto* s : {s_field, s_chain, s_cone}) s->add_option("--gamma", gamma)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*version) {
            std::cout << "lqglab " << lqg::cli::kVersion << " (config format " << lqg::cli::kConfigFormat
                      << ", manifest format " << lqg::cli::kManifestFormat << ", csv format " << lqg::cli::kCsvFormat
                      << ")\n";
            return 0;
        }
        if (*list) {
            if (list_json) {
                nlohmann::json j = nlohmann::json::array();
                for (const auto& c : lqg::cli::registry())
                    j.push_back({{"name", c.name},
                                 {"citation", c.citation},
                                 {"description", c.description},
                                 {"default_tolerance", c.default_tolerance},
                                 {"default_n", c.default_n}});
                std::cout << j.dump(2) << "\n";
            } else {
                for (const auto& c : lqg::cli::registry())
                    std::cout << c.name << "\n  citation: " << c.citation << "\n  tolerance: " << c.default_tolerance
                              << "\n  default n: " << c.default_n << "\n";
            }
            return 0;
        }
        if (*run) {
            lqg::cli::RunConfig cfg = config_path.empty() ? lqg::cli::RunConfig{} : lqg::cli::load_config(config_path);
            for (const auto& s : sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) throw lqg::cli::ConfigError("--set expects key=value, got '" + s + "'");
                lqg::cli::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
            }
            if (seed_flag) cfg.seed = *seed_flag;
            if (workers_flag) cfg.workers = *workers_flag;
            if (!suite_flag.empty()) lqg::cli::apply_setting(cfg, "suite", suite_flag);
            if (!out_flag.empty()) cfg.output_dir = out_flag;
            if (gnuplot_flag) cfg.gnuplot = true;

            const lqg::cli::RunManifest m = lqg::cli::run(cfg);
            for (const auto& o : m.checks) {
                const auto& r = o.report;
                std::printf("%-28s %s  estimate=%.6g  stderr=%.3g  n=%llu  %.0f ms%s%s\n", r.name.c_str(),
                            r.pass ? "pass" : "FAIL", r.estimate, r.std_error, static_cast<unsigned long long>(r.n),
                            r.runtime_ms, r.note.empty() ? "" : "  ", r.note.c_str());
            }
            std::printf("manifest: %s\n", (cfg.output_dir / "manifest.json").string().c_str());
            return m.all_pass() ? 0 : kExitFail;
        }
        if (*s_field) {
            const auto k = lqg::field::parse_kind(kind);
            const auto p = lqg::field::derive_params(gamma, W);
            const lqg::field::GridSpec grid{lqg::field::calibrated_t_cut(p, k), nx, ny};
            std::optional<lqg::field::CWindow> window;
            if (k == lqg::field::SurfaceKind::ThickDisk || k == lqg::field::SurfaceKind::Sphere)
                window = lqg::field::CWindow{c_lo};
            const auto f = lqg::field::sample_surface(k, gamma, W, grid, window, sample_seed);
            const auto d = f.domain();
            PlotData out{"field", {"i", "j", "x", "y", "h"}, {}};
            for (int i = 0; i < grid.nx; ++i)
                for (int j = 0; j < grid.ny; ++j)
                    out.rows.push_back({double(i), double(j), grid.cell_center(i), (j + 0.5) * grid.dy(d), f.value(i, j)});
            emit(out,
                 {"lqglab csv " + std::to_string(lqg::cli::kCsvFormat) + " field", "kind=" + kind,
                  "gamma=" + num(gamma), "W=" + num(W), "t_cut=" + num(grid.t_cut), "c=" + num(f.c_const),
                  "importance_weight=" + num(f.importance_weight), "seed=" + std::to_string(sample_seed)},
                 out_path);
            return 0;
        }
        if (*s_chain) {
            const auto chain = lqg::beaded::sample_levy_marks(chain_W, gamma, T, cutoff, sample_seed);
            PlotData out{"chain", {"u", "left_len"}, {}};
            for (const auto& b : chain.beads) out.rows.push_back({b.u, b.left_len});
            emit(out,
                 {"lqglab csv " + std::to_string(lqg::cli::kCsvFormat) + " chain", "gamma=" + num(gamma),
                  "W=" + num(chain_W), "T=" + num(T), "cutoff=" + num(cutoff),
                  "left_length=" + num(chain.left_length()), "seed=" + std::to_string(sample_seed)},
                 out_path);
            return 0;
        }
        if (*s_curve) {
            const auto d = lqg::sle::sample_driving(kappa, rho_m, rho_p, steps, dt, sample_seed);
            const std::vector<std::string> header{"lqglab csv " + std::to_string(lqg::cli::kCsvFormat) +
                                                      (driving_only ? " driving" : " curve"),
                                                  "kappa=" + num(kappa), "rho_minus=" + num(rho_m),
                                                  "rho_plus=" + num(rho_p), "dt=" + num(dt),
                                                  "seed=" + std::to_string(sample_seed)};
            if (driving_only) {
                PlotData out{"driving", {"t", "W", "V_minus", "V_plus"}, {}};
                for (std::size_t k = 0; k < d.W.size(); ++k)
                    out.rows.push_back({k * d.dt, d.W[k], d.V_minus[k], d.V_plus[k]});
                emit(out, header, out_path);
            } else {
                const auto curve = lqg::sle::trace_curve(d);
                PlotData out{"curve", {"t", "x", "y"}, {}};
                for (std::size_t k = 0; k < curve.points.size(); ++k)
                    out.rows.push_back({curve.t[k], curve.points[k].real(), curve.points[k].imag()});
                emit(out, header, out_path);
            }
            return 0;
        }
        if (*s_cone) {
            const auto cov = lqg::cone::CovSpec::from_gamma(gamma);
            const auto path = lqg::cone::sample_cone_path({L0, R0}, cov, cone_dt, sample_seed, max_steps);
            PlotData out{"cone_path", {"t", "L", "R"}, {}};
            for (std::size_t k = 0; k < path.points.size(); ++k) {
                const bool last = path.exited && k + 1 == path.points.size();
                out.rows.push_back({last ? path.exit_time : k * cone_dt, path.points[k].L, path.points[k].R});
            }
            emit(out,
                 {"lqglab csv " + std::to_string(lqg::cli::kCsvFormat) + " cone-path", "gamma=" + num(gamma),
                  "dt=" + num(cone_dt), "exited=" + std::string(path.exited ? "true" : "false"),
                  "seed=" + std::to_string(sample_seed)},
                 out_path);
            return 0;
        }
    } catch (const lqg::cli::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const lqg::ParameterError& e) {
        std::fprintf(stderr, "parameter error: %s\n", e.what());
        return kExitConfig;
    } catch (const lqg::cli::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFail;
    }
    return 0;
}
