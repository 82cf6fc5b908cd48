#include "gridsim/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <thread>

#include "csv.hpp"
#include "gridsim/optimizer.hpp"
#include "gridsim/presets.hpp"
#include "gridsim/report.hpp"
#include "gridsim/scenario.hpp"

namespace gridsim {

namespace {

// Relative inputs that do not exist here are looked up in the config dir.
std::filesystem::path resolve_input(const std::string& given) {
    std::filesystem::path p(given);
    if (std::filesystem::exists(p) || p.is_absolute()) return p;
    if (const char* dir = std::getenv("GRIDSIM_CONFIG_DIR"); dir && *dir) {
        auto alt = std::filesystem::path(dir) / p;
        if (std::filesystem::exists(alt)) return alt;
    }
    return p;
}

struct Loaded {
    Scenario scenario;
    std::string text;
    ScenarioData data;
};

// Parse, validate and load traces. Schema and invariant problems surface as
// ParseError / ValidationError; trace problems as TraceError.
Loaded load_all(const std::string& path, std::ostream& err, int burn_in_override = -1) {
    Loaded l;
    const auto p = resolve_input(path);
    l.text = detail::read_file(p);
    l.scenario = parse_scenario(l.text, p.parent_path());
    if (burn_in_override >= 0) l.scenario.dispatch.burn_in_years = burn_in_override;
    auto violations = validate_scenario(l.scenario);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    for (const auto& w : scenario_warnings(l.scenario)) err << "warning: [" << w.code << "] " << w.message << '\n';
    l.data = load_scenario_data(l.scenario);
    if (l.data.clamped_cells > 0)
        err << "warning: " << l.data.clamped_cells << " capacity-factor cells clamped into [0, 1]\n";
    return l;
}

std::size_t resolve_threads(std::size_t t) {
    if (t > 0) return t;
    return std::max(1u, std::thread::hardware_concurrency());
}

void emit_summary(const RunSummary& rs, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << summary_to_json(rs);
    } else {
        write_summary(rs, out_path);
        out << format_summary(rs);
    }
}

std::optional<IntervalWindow> parse_window(const std::string& text) {
    if (text.empty()) return IntervalWindow{};
    const auto colon = text.find(':');
    if (colon == std::string::npos) return std::nullopt;
    auto a = detail::parse_double(std::string_view(text).substr(0, colon));
    auto b = detail::parse_double(std::string_view(text).substr(colon + 1));
    if (!a || !b || *a < 0 || *b < 0) return std::nullopt;
    return IntervalWindow{static_cast<std::size_t>(*a), static_cast<std::size_t>(*b)};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"gridsim: chronological dispatch and capacity optimisation for renewable grids", "gridsim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "gridsim 1.0");

    std::string scenario_path, portfolio_path, summary_path, csv_path, out_path, checkpoint, dispatch_csv, window_text;
    std::string preset_name, preset_dir = ".", portfolio_out, params_text;
    std::uint64_t seed = 1;
    std::size_t threads = 1, generations = 0, population = 0, steps = 3;
    int burn_in = -1;
    double tolerance = 1e-6;
    bool reoptimize = false;

    auto* validate = app.add_subcommand("validate", "check a scenario and the data it references");
    validate->add_option("scenario", scenario_path, "scenario YAML")->required();

    auto* simulate_cmd = app.add_subcommand("simulate", "dispatch a fixed portfolio and summarise it");
    simulate_cmd->add_option("scenario", scenario_path, "scenario YAML")->required();
    simulate_cmd->add_option("portfolio", portfolio_path, "portfolio or summary JSON")->required();
    simulate_cmd->add_option("--out", out_path, "summary JSON path (default: stdout)");
    simulate_cmd->add_option("--dispatch-csv", dispatch_csv, "write the per-interval ledger here");
    simulate_cmd->add_option("--window", window_text, "ledger window FIRST:COUNT (intervals)");
    simulate_cmd->add_option("--burn-in-years", burn_in, "discard this many leading calendar years");
    simulate_cmd->add_option("--seed", seed, "recorded in the summary");

    auto* optimize_cmd = app.add_subcommand("optimize", "search for the least-cost reliable portfolio");
    optimize_cmd->add_option("scenario", scenario_path, "scenario YAML")->required();
    optimize_cmd->add_option("--seed", seed, "random seed");
    optimize_cmd->add_option("--threads", threads, "evaluation threads (0 = all cores)");
    optimize_cmd->add_option("--checkpoint", checkpoint, "checkpoint file; resumed when present");
    optimize_cmd->add_option("--out", out_path, "summary JSON path (default: stdout)");
    optimize_cmd->add_option("--portfolio-out", portfolio_out, "write the best portfolio JSON here");
    optimize_cmd->add_option("--generations", generations, "override the scenario's generation budget");
    optimize_cmd->add_option("--population", population, "override the scenario's population size");
    optimize_cmd->add_option("--burn-in-years", burn_in, "discard this many leading calendar years");

    auto* sens_cmd = app.add_subcommand("sensitivity", "scale one cost at a time over 0.75x..1.25x");
    sens_cmd->add_option("scenario", scenario_path, "scenario YAML")->required();
    sens_cmd->add_option("portfolio", portfolio_path, "portfolio or summary JSON")->required();
    sens_cmd->add_option("--steps", steps, "multipliers per parameter");
    sens_cmd->add_option("--params", params_text, "comma-separated subset of parameters");
    sens_cmd->add_flag("--reoptimize", reoptimize, "re-run the optimiser for every case");
    sens_cmd->add_option("--seed", seed, "random seed when re-optimising");
    sens_cmd->add_option("--threads", threads, "evaluation threads when re-optimising");
    sens_cmd->add_option("--out", out_path, "CSV path (default: stdout)");
    sens_cmd->add_option("--burn-in-years", burn_in, "discard this many leading calendar years");

    auto* report_cmd = app.add_subcommand("report", "print a summary in readable form");
    report_cmd->add_option("summary", summary_path, "summary JSON")->required();

    auto* verify_cmd = app.add_subcommand("verify-dispatch", "recheck the balance identity in a ledger CSV");
    verify_cmd->add_option("csv", csv_path, "dispatch CSV")->required();
    verify_cmd->add_option("--tolerance", tolerance, "largest acceptable residual (GW)");

    auto* preset_cmd = app.add_subcommand("preset", "write a shipped preset scenario and its data");
    preset_cmd->add_option("name", preset_name, "7grids, supergrid or smartgrid")->required();
    preset_cmd->add_option("--dir", preset_dir, "output directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    try {
        if (validate->parsed()) {
            const auto l = load_all(scenario_path, err);
            out << "ok: " << l.scenario.id << " (" << l.scenario.regions.size() << " regions, "
                << l.scenario.zones.size() << " zones, " << l.scenario.interconnectors.size() << " interconnectors, "
                << l.data.traces.horizon() << " intervals)\n";
            return kExitOk;
        }

        if (preset_cmd->parsed()) {
            const auto kind = preset_from_string(preset_name);
            if (!kind) {
                err << "unknown preset '" << preset_name << "' (expected 7grids, supergrid or smartgrid)\n";
                return kExitUsage;
            }
            out << write_preset_files(*kind, preset_dir).string() << '\n';
            return kExitOk;
        }

        if (report_cmd->parsed()) {
            out << format_summary(read_summary(resolve_input(summary_path)));
            return kExitOk;
        }

        if (verify_cmd->parsed()) {
            const auto check = verify_dispatch_csv(csv_path);
            out << check.rows << " rows, max balance residual " << check.max_residual_gw << " GW\n";
            if (check.max_residual_gw > tolerance) {
                err << "balance identity violated beyond " << tolerance << " GW\n";
                return kExitValidation;
            }
            return kExitOk;
        }

        const auto l = load_all(scenario_path, err, burn_in);
        const std::string hash = input_content_hash(l.scenario, l.text);

        if (simulate_cmd->parsed()) {
            const auto window = parse_window(window_text);
            if (!window) {
                err << "--window expects FIRST:COUNT\n";
                return kExitUsage;
            }
            const Portfolio p = read_portfolio(l.scenario, resolve_input(portfolio_path));
            const auto model = build_dispatch_model(l.scenario, l.data.traces, l.data.profiles);
            SimulateOptions opts;
            opts.record_intervals = !dispatch_csv.empty();
            const auto ev = evaluate_detailed(model, p, opts);
            if (!dispatch_csv.empty()) write_dispatch_csv(model, ev.dispatch, *window, dispatch_csv);
            emit_summary(make_summary(l.scenario, ev, "simulate", seed, hash), out_path, out);
            err << "simulated " << model.horizon << " intervals in " << elapsed() << " s\n";
            return kExitOk;
        }

        if (optimize_cmd->parsed()) {
            Scenario s = l.scenario;
            if (generations > 0) s.optimizer.generations = generations;
            if (population > 0) s.optimizer.population = population;
            const auto model = build_dispatch_model(s, l.data.traces, l.data.profiles);
            DEConfig cfg = de_config_for(s, seed, resolve_threads(threads));
            if (!checkpoint.empty()) cfg.checkpoint = checkpoint;
            auto progress = [&](const std::string& label, const GenerationReport& g) {
                if (g.generation % 10 == 0)
                    err << label << ": generation " << g.generation << ", best " << g.best_value << '\n';
            };
            const auto result = optimize_portfolio(model, cfg, progress);
            const auto ev = evaluate_detailed(model, result.best);
            RunSummary rs = make_summary(s, ev, "optimize", seed, hash);
            if (result.decomposed) {
                std::string reasons;
                for (const auto& r : result.regions) {
                    rs.generations += r.de.generations;
                    rs.evaluations += r.de.evaluations;
                    reasons += (reasons.empty() ? "" : ",") + r.region + ":" + to_string(r.de.stop);
                }
                rs.stop_reason = reasons;
            } else {
                rs.generations = result.de.generations;
                rs.evaluations = result.de.evaluations;
                rs.stop_reason = to_string(result.de.stop);
                for (double h : result.de.history) rs.history.push_back(round_sig6(h));
            }
            if (!portfolio_out.empty()) {
                std::ofstream pf(portfolio_out, std::ios::binary | std::ios::trunc);
                if (!pf) throw Error("cannot write '" + portfolio_out + "'");
                pf << portfolio_to_json(s, result.best);
            }
            emit_summary(rs, out_path, out);
            err << "optimised in " << elapsed() << " s\n";
            return kExitOk;
        }

        if (sens_cmd->parsed()) {
            SensitivityOptions opts;
            if (!params_text.empty()) {
                opts.parameters.clear();
                for (auto name : detail::split_row(params_text)) {
                    auto p = cost_parameter_from_string(name);
                    if (!p) {
                        err << "unknown parameter '" << name << "'\n";
                        return kExitUsage;
                    }
                    opts.parameters.push_back(*p);
                }
            }
            opts.steps = steps;
            opts.reoptimize = reoptimize;
            opts.de = de_config_for(l.scenario, seed, resolve_threads(threads));
            const Portfolio p = read_portfolio(l.scenario, resolve_input(portfolio_path));
            const auto model = build_dispatch_model(l.scenario, l.data.traces, l.data.profiles);
            const auto rows = sensitivity_sweep(model, p, opts);
            std::ostringstream csv;
            csv << "parameter,multiplier,lcoe,delta\n";
            for (const auto& r : rows)
                csv << to_string(r.parameter) << ',' << round_sig6(r.multiplier) << ',' << round_sig6(r.lcoe) << ','
                    << round_sig6(r.delta) << '\n';
            if (out_path.empty()) {
                out << csv.str();
            } else {
                std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
                if (!f) throw Error("cannot write '" + out_path + "'");
                f << csv.str();
                out << "wrote " << rows.size() << " rows to " << out_path << '\n';
            }
            return kExitOk;
        }
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const TraceError& e) {
        err << "error: " << e.what() << '\n';
        return validate->parsed() ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace gridsim
