// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>

#include "gridsim/cost.hpp"
#include "gridsim/dispatch.hpp"
#include "gridsim/network.hpp"
#include "gridsim/optimizer.hpp"
#include "gridsim/presets.hpp"
#include "gridsim/report.hpp"
#include "gridsim/scenario.hpp"
#include "support.hpp"

using namespace gridsim;

namespace {

constexpr double kTechLcoeTarget = 50.0;
constexpr double kTechLcoeTol = 0.05;       // relative
constexpr double kRoundTripTol = 0.0001;    // 0.01 percentage points
constexpr double kBalanceTol = 1e-9;        // GW
constexpr double kSensitivityUnityTol = 1e-12;
constexpr std::size_t kLattice = 51;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("%s  %2d  %-34s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t cores() { return std::max(1u, std::thread::hardware_concurrency()); }

// --------------------------------------------------------------------------

void tech_lcoe() {
    const TechnologyCosts c;
    const double pv = technology_lcoe(c.pv, 0.30, c.discount_rate_real);
    const double wind = technology_lcoe(c.wind, 0.41, c.discount_rate_real);
    const bool ok = std::abs(pv / kTechLcoeTarget - 1) <= kTechLcoeTol && std::abs(wind / kTechLcoeTarget - 1) <= kTechLcoeTol;
    report(1, "technology LCOE anchors", ok, fmt("pv %.3f, wind %.3f $/MWh (target 50 +/- 5%%)", pv, wind));
}

void loss_anchor() {
    const double r = line_loss_rate(1000.0);
    report(2, "loss per 1000 km", r == 0.03, fmt("%.17g", r));
}

void round_trip() {
    // Charge 10 GWh from the grid over several intervals, then drain fully.
    auto s = StorageState::with_round_trip(4.0, 50.0, 0.8, 0.0);
    double in = 0.0, out = 0.0;
    for (int i = 0; i < 5; ++i) {
        auto c = storage_update(s, 4.0, StorageDirection::Charge);
        in += c.accepted_gw * kIntervalHours;
        s = c.state;
    }
    for (int i = 0; i < 1000 && s.soc_gwh > 0.0; ++i) {
        auto d = storage_update(s, 3.0, StorageDirection::Discharge);
        out += d.accepted_gw * kIntervalHours;
        s = d.state;
    }
    const double ratio = out / in;
    report(3, "storage round trip", std::abs(ratio - 0.8) <= kRoundTripTol && s.soc_gwh == 0.0,
           fmt("returned %.6f%% of %.1f GWh", 100 * ratio, in));
}

void ev_floor() {
    testing::TempDir dir;
    const auto path = write_preset_files(PresetKind::SmartGrid, dir.path());
    const auto s = load_scenario(path);
    const auto data = load_scenario_data(s);
    const auto model = build_dispatch_model(s, data.traces, data.profiles);

    // A starved system and a comfortable one.
    Portfolio lean = Portfolio::zeros(s);
    Portfolio rich = Portfolio::zeros(s);
    for (std::size_t z = 0; z < s.zones.size(); ++z) {
        lean.wind_gw[z] = 1.0;
        rich.pv_gw[z] = 15.0;
        rich.wind_gw[z] = 15.0;
    }
    for (std::size_t r = 0; r < s.regions.size(); ++r) {
        rich.storage_power_gw[r] = 5.0;
        rich.storage_energy_gwh[r] = 60.0;
    }
    for (auto& l : rich.link_gw) l = 5.0;

    double worst = 1e300;
    std::size_t checked = 0;
    bool ok = s.flags.ev_flexibility_enabled;
    for (const auto* p : {&lean, &rich}) {
        const auto dr = simulate(model, *p, {true});
        for (const auto& iv : dr.intervals)
            for (std::size_t r = 0; r < iv.regions.size(); ++r) {
                const double cap = model.ev_capacity_gwh[r];
                if (cap <= 0.0) continue;
                const double frac = iv.regions[r].ev_soc / cap;
                worst = std::min(worst, frac);
                ok = ok && iv.regions[r].ev_soc >= s.flags.ev_min_soc * cap;
                ++checked;
            }
    }
    ok = ok && checked > 0;
    report(4, "EV state-of-charge floor", ok, fmt("min SoC %.6f of capacity over %zu region-intervals", worst, checked));
}

void hydro_cap() {
    // No VRE, 2 GW of load, 3 GW of hydro/bio limited to 10 GWh a year,
    // across a new year.
    auto s = testing::chain_scenario(1);
    s.regions[0].has_hydro_bio = true;
    s.regions[0].hydro_bio_power_cap_gw = 3.0;
    s.regions[0].hydro_bio_annual_cap_twh = 0.010;
    using namespace std::chrono;
    const auto traces = testing::flat_traces(1, 48 * 14, 0.0, 0.0, 2.0, sys_days{2020y / December / 25});
    const auto capped = simulate(s, Portfolio::zeros(s), traces);

    auto loose = s;
    loose.regions[0].hydro_bio_annual_cap_twh = 100.0;
    const auto uncapped = simulate(loose, Portfolio::zeros(loose), traces);

    bool ok = capped.years.size() == 2;
    double worst = 0.0, wanted = 0.0;
    for (std::size_t y = 0; y < capped.years.size(); ++y) {
        const double used = capped.years[y].regions[0].hydro_bio_gwh;
        worst = std::max(worst, used);
        ok = ok && used <= 10.0 + 1e-9;
        wanted = std::max(wanted, uncapped.years[y].regions[0].hydro_bio_gwh);
    }
    ok = ok && wanted > 10.0;
    report(5, "hydro/bio annual cap", ok, fmt("max %.6f GWh/yr against a 10 GWh cap (%.1f GWh uncapped)", worst, wanted));
}

void balance_identity() {
    std::mt19937_64 rng(20200101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto sc = testing::chain_scenario(4);
    Interconnector chord;
    chord.id = "L4";
    chord.from_region = "R3";
    chord.to_region = "R0";
    chord.length_km = 2000;
    sc.interconnectors.push_back(chord);
    const auto topo = build_topology(sc);
    std::vector<double> draws(48);
    double worst = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        DispatchContext ctx;
        ctx.topology = &topo;
        ctx.ev_flexible = u(rng) < 0.5;
        ctx.shared_hydro = u(rng) < 0.3;
        for (std::size_t e = 0; e < topo.edges.size(); ++e) ctx.edge_capacity.push_back(3.0 * u(rng));
        SystemState st;
        IntervalInputs in;
        for (auto& d : draws) d = 0.5 * u(rng);
        for (int r = 0; r < 4; ++r) {
            st.storage.push_back(StorageState::with_round_trip(3 * u(rng), 20 * u(rng), 0.8, u(rng)));
            EVAggregateState ev{0, 20 * u(rng), 3 * u(rng), 0.25, 0.85};
            ev.soc_gwh = ev.capacity_gwh * (0.25 + 0.75 * u(rng));
            st.ev.push_back(ev);
            st.hydro.push_back({2 * u(rng), 0.002 * u(rng), 0.0});
            in.demand_gw.push_back(4 * u(rng));
            in.vre_gw.push_back(8 * u(rng));
            in.pv_gw.push_back(in.vre_gw.back() * u(rng));
            in.ev_draw_window.emplace_back(draws.data(), 1 + static_cast<std::size_t>(47 * u(rng)));
            in.ev_fixed_gw.push_back(u(rng));
        }
        st.shared_hydro = {4.0, 0.004 * u(rng), 0.0};
        IntervalResult out;
        FlowWorkspace ws;
        step_interval(ctx, st, in, out, ws);
        for (const auto& o : out.regions) {
            const double res = o.vre_used + o.storage_discharge + o.hydro_bio + o.net_import - o.storage_charge -
                               o.ev_charge - (o.demand - o.unserved);
            worst = std::max(worst, std::abs(res));
        }
    }
    report(6, "per-region balance identity", worst <= kBalanceTol, fmt("max residual %.3g GW over %d intervals", worst, n));
}

// Two decision variables: PV capacity and storage energy (power tied to a
// four-hour duration). Dear hydro/bio backup keeps every point feasible.
struct TwoVariableProblem {
    Scenario s = testing::chain_scenario(1);
    DispatchModel model;
    Bounds pv{0.0, 10.0};
    Bounds energy{0.0, 40.0};

    TwoVariableProblem() {
        s.regions[0].has_hydro_bio = true;
        s.regions[0].hydro_bio_power_cap_gw = 5.0;
        s.regions[0].hydro_bio_annual_cap_twh = 1000.0;
        s.costs.hydro_bio_price_per_mwh = 300.0;
        const std::size_t n = 48 * 28;
        const auto start = testing::jan1(2021);
        auto traces = align({{"pv0", synth_trace({SynthKind::Solar, 31, start, n, 0.25, 1.0, 0.3})},
                             {"wind0", testing::constant(0.0, n)},
                             {"load0", testing::constant(1.0, n)}});
        model = build_dispatch_model(s, traces);
    }

    Portfolio portfolio(double pv_gw, double energy_gwh) const {
        Portfolio p = Portfolio::zeros(s);
        p.pv_gw[0] = pv_gw;
        p.storage_energy_gwh[0] = energy_gwh;
        p.storage_power_gw[0] = energy_gwh / 4.0;
        return p;
    }
    double operator()(double pv_gw, double energy_gwh) const { return evaluate(model, portfolio(pv_gw, energy_gwh)).total; }
};

void optimizer_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    const TwoVariableProblem prob;
    const double dp = (prob.pv.hi - prob.pv.lo) / (kLattice - 1);
    const double de_ = (prob.energy.hi - prob.energy.lo) / (kLattice - 1);

    // Exhaustive lattice first.
    double best = 1e300;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < kLattice; ++i)
        for (std::size_t j = 0; j < kLattice; ++j) {
            const double v = prob(prob.pv.lo + i * dp, prob.energy.lo + j * de_);
            if (v < best) best = v, bi = i, bj = j;
        }
    const double opt_pv = prob.pv.lo + bi * dp, opt_e = prob.energy.lo + bj * de_;

    DEConfig cfg;
    cfg.bounds = {prob.pv, prob.energy};
    cfg.population_size = 20;
    cfg.generations = 150;
    cfg.seed = 7;
    cfg.threads = cores();
    const auto r = de_optimize(cfg, [&](std::span<const double> x) { return prob(x[0], x[1]); });
    const double secs = seconds_since(t0);

    const bool near = std::abs(r.best[0] - opt_pv) <= dp + 1e-9 && std::abs(r.best[1] - opt_e) <= de_ + 1e-9;
    const bool ok = near && r.best_value <= best + 1e-9 && secs < 60.0;
    report(7, "optimizer vs 51x51 lattice", ok,
           fmt("lattice (%.2f GW, %.1f GWh) %.4f; DE (%.3f GW, %.2f GWh) %.4f $/MWh; %.1f s", opt_pv, opt_e, best,
               r.best[0], r.best[1], r.best_value, secs));
}

struct PresetRun {
    Scenario s;
    Evaluation ev;
    OptimizationResult opt;
    DispatchModel model;
};

PresetRun optimize_preset(PresetKind kind, const std::filesystem::path& dir) {
    PresetRun out;
    out.s = load_scenario(write_preset_files(kind, dir));
    const auto data = load_scenario_data(out.s);
    out.model = build_dispatch_model(out.s, data.traces, data.profiles);
    out.opt = optimize_portfolio(out.model, de_config_for(out.s, 7, cores()));
    out.ev = evaluate_detailed(out.model, out.opt.best);
    return out;
}

double storage_gwh(const Portfolio& p) {
    double x = 0.0;
    for (double e : p.storage_energy_gwh) x += e;
    return x;
}

std::optional<PresetRun> scenario_claims() {
    const auto t0 = std::chrono::steady_clock::now();
    testing::TempDir dir;
    auto seven = optimize_preset(PresetKind::SevenGrids, dir.path());
    auto super = optimize_preset(PresetKind::SuperGrid, dir.path());
    auto smart = optimize_preset(PresetKind::SmartGrid, dir.path());

    // Volume-weighted over the isolated grids.
    double cost = 0.0, volume = 0.0;
    for (std::size_t r = 0; r < seven.s.regions.size(); ++r) {
        const auto sub = restrict_to_region(seven.model, r);
        Portfolio p = Portfolio::zeros(*sub.scenario);
        p.pv_gw.clear();
        p.wind_gw.clear();
        for (std::size_t z = 0; z < seven.s.zones.size(); ++z)
            if (seven.model.zone_region[z] == r) {
                p.pv_gw.push_back(seven.opt.best.pv_gw[z]);
                p.wind_gw.push_back(seven.opt.best.wind_gw[z]);
            }
        p.storage_power_gw = {seven.opt.best.storage_power_gw[r]};
        p.storage_energy_gwh = {seven.opt.best.storage_energy_gwh[r]};
        const auto ev = evaluate_detailed(sub, p);
        cost += ev.fitness.lcoe * ev.energy.delivered_mwh;
        volume += ev.energy.delivered_mwh;
    }
    const double seven_lcoe = cost / volume;
    const double secs = seconds_since(t0);

    const bool reliable = seven.ev.fitness.penalty == 0.0 && super.ev.fitness.penalty == 0.0 &&
                          smart.ev.fitness.penalty == 0.0;
    const bool a = super.ev.fitness.lcoe <= seven_lcoe;
    report(8, "(a) supergrid LCOE <= 7grids", a && reliable && secs < 600.0,
           fmt("supergrid %.3f vs 7grids %.3f $/MWh (%s)", super.ev.fitness.lcoe, seven_lcoe,
               reliable ? "all within the reliability limit" : "reliability limit missed"));
    const double e7 = storage_gwh(seven.opt.best), es = storage_gwh(super.opt.best), em = storage_gwh(smart.opt.best);
    report(8, "(b) storage smart <= super <= 7grids", em <= es && es <= e7 && reliable && secs < 600.0,
           fmt("%.1f <= %.1f <= %.1f GWh; %.0f s for three optimisations", em, es, e7, secs));
    return super;
}

void sensitivity_signs(const PresetRun& run) {
    SensitivityOptions opts;
    opts.steps = 3;
    const auto rows = sensitivity_sweep(run.model, run.opt.best, opts);
    const double base = run.ev.fitness.lcoe;
    bool up = false, unity = true;
    double worst_unity = 0.0, at125 = 0.0;
    for (const auto& r : rows) {
        if (r.multiplier == 1.0) {
            const double rel = std::abs(r.lcoe / base - 1.0);
            worst_unity = std::max(worst_unity, rel);
            unity = unity && rel <= kSensitivityUnityTol;
        }
        if (r.parameter == CostParameter::DiscountRate && r.multiplier == 1.25) {
            at125 = r.lcoe;
            up = r.lcoe > base;
        }
    }
    report(9, "sensitivity signs", up && unity,
           fmt("discount x1.25: %.4f -> %.4f $/MWh; worst x1.0 drift %.2g", base, at125, worst_unity));
}

void cli_determinism() {
    testing::TempDir dir;
    write_preset_files(PresetKind::SuperGrid, dir.path());
    const std::size_t n = std::max<std::size_t>(2, std::min<std::size_t>(4, cores()));
    auto run = [&](std::size_t threads, const std::string& name) {
        const std::string cmd = std::string("\"") + GRIDSIM_EXE + "\" optimize \"" +
                                (dir / "supergrid.yaml").string() + "\" --seed 7 --threads " +
                                std::to_string(threads) + " --out \"" + (dir / name).string() + "\" >/dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    const bool ran = run(1, "t1.json") && run(n, "tn.json");
    const auto a = testing::read_file(dir / "t1.json"), b = testing::read_file(dir / "tn.json");
    report(10, "optimize --seed 7 determinism", ran && !a.empty() && a == b,
           fmt("--threads 1 vs --threads %zu: %s (%zu bytes)", n, a == b ? "identical" : "different", a.size()));
}

void horizon() {
    using namespace std::chrono;
    const auto n = interval_count(2020y / January / 1, 2029y / December / 31);
    report(11, "2020-2029 interval count", n == 175344, fmt("%zu", n));
}

}  // namespace

int main() {
    try {
        tech_lcoe();
        loss_anchor();
        round_trip();
        ev_floor();
        hydro_cap();
        balance_identity();
        optimizer_oracle();
        const auto super = scenario_claims();
        if (super) sensitivity_signs(*super);
        cli_determinism();
        horizon();
    } catch (const std::exception& e) {
        std::printf("FAIL  acceptance run aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%s\n", failures == 0 ? "all criteria pass" : (std::to_string(failures) + " failing").c_str());
    return failures == 0 ? 0 : 1;
}
