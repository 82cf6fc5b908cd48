#include "gridsim/presets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace gridsim {

using namespace std::chrono;

namespace {

struct DeskRegion {
    const char* id;
    double demand_gw;
    double pv_cf;
    double wind_cf;
    double wind_loading;  // on the shared weather factor
};

// West and east sit on opposite sides of the same weather systems.
constexpr DeskRegion kDeskRegions[] = {
    {"west", 2.5, 0.27, 0.40, 0.85},
    {"central", 4.0, 0.30, 0.36, 0.0},
    {"east", 3.0, 0.25, 0.41, -0.85},
};

std::vector<double> normalised(std::vector<double> w) {
    double sum = 0.0;
    for (double x : w) sum += x;
    for (double& x : w) x /= sum;
    return w;
}

}  // namespace

std::string to_string(PresetKind k) {
    switch (k) {
        case PresetKind::SevenGrids: return "7grids";
        case PresetKind::SuperGrid: return "supergrid";
        case PresetKind::SmartGrid: return "smartgrid";
    }
    return "unknown";
}

std::optional<PresetKind> preset_from_string(std::string_view name) {
    for (auto k : {PresetKind::SevenGrids, PresetKind::SuperGrid, PresetKind::SmartGrid})
        if (to_string(k) == name) return k;
    return std::nullopt;
}

DeskDataset make_desk_dataset(std::uint64_t seed, std::size_t days) {
    const Timestamp start = sys_days{2020y / January / 1};
    const std::size_t n = days * kIntervalsPerDay;
    const auto weather = synth_factor(seed, n, 0.995);

    std::vector<std::pair<std::string, TimeSeries>> series;
    std::uint64_t k = 0;
    for (const auto& r : kDeskRegions) {
        const std::string id = r.id;
        SynthSpec pv{SynthKind::Solar, seed + 101 + k, start, n, r.pv_cf, 1.0, 0.35};
        SynthSpec wind{SynthKind::Wind, seed + 202 + k, start, n, r.wind_cf, 0.15, 0.8};
        wind.common_factor = weather;
        wind.common_loading = r.wind_loading;
        SynthSpec demand{SynthKind::Demand, seed + 303 + k, start, n, r.demand_gw, 0.12, 0.05};
        series.emplace_back(id + "_pv", synth_trace(pv));
        series.emplace_back(id + "_wind", synth_trace(wind));
        series.emplace_back(id + "_demand", synth_trace(demand));
        ++k;
    }
    DeskDataset d;
    d.traces = align(std::move(series));

    std::vector<double> ev(kIntervalsPerDay), heat(kIntervalsPerDay);
    for (std::size_t s = 0; s < kIntervalsPerDay; ++s) {
        const double h = (static_cast<double>(s) + 0.5) * kIntervalHours;
        ev[s] = 0.3 + std::exp(-std::pow((h - 19.0) / 2.5, 2.0));
        heat[s] = 0.5 + std::exp(-std::pow((h - 7.5) / 1.5, 2.0)) + 0.8 * std::exp(-std::pow((h - 19.0) / 2.0, 2.0));
    }
    d.profiles["ev_evening"] = normalised(ev);
    d.profiles["heat_daily"] = normalised(heat);
    return d;
}

Scenario make_preset_scenario(PresetKind kind) {
    Scenario s;
    s.id = to_string(kind);
    s.trace_files = {std::string(kPresetTraceFile)};
    s.profile_files = {std::string(kPresetProfileFile)};
    s.flags.interconnection_enabled = kind != PresetKind::SevenGrids;
    s.flags.ev_flexibility_enabled = kind == PresetKind::SmartGrid;

    for (const auto& r : kDeskRegions) {
        Region region;
        region.id = r.id;
        region.zones = {std::string(r.id) + "_z1"};
        if (region.id == "central") {
            region.has_hydro_bio = true;
            region.hydro_bio_power_cap_gw = 0.8;
            region.hydro_bio_annual_cap_twh = 0.12;
        }
        s.regions.push_back(region);
        s.zones.push_back({region.zones[0], region.id, region.id + "_pv", region.id + "_wind", std::nullopt});
        s.demand.base_trace[region.id] = region.id + "_demand";
    }
    Interconnector wc;
    wc.id = "west-central";
    wc.from_region = "west";
    wc.to_region = "central";
    wc.length_km = 1200.0;
    Interconnector ce;
    ce.id = "central-east";
    ce.from_region = "central";
    ce.to_region = "east";
    ce.length_km = 900.0;
    s.interconnectors = {wc, ce};

    FleetClass cars;
    cars.name = "passenger cars";
    cars.count = 2.0e6;
    cars.annual_km = 12600.0;
    cars.kwh_per_100km = 27.0;
    cars.flexible_share = s.flags.ev_flexible_share;
    cars.profile = "ev_evening";
    s.demand.fleets = {cars};
    HeatingSpec heat;
    heat.name = "space heating";
    heat.fuel_energy_pj = 10.0;
    heat.fuel_efficiency = 0.825;
    heat.cop = 4.0;
    heat.profile = "heat_daily";
    s.demand.heating = {heat};
    s.demand.industry_gw = 0.4;

    auto& o = s.optimizer;
    o.pv_gw = {0.0, 30.0};
    o.wind_gw = {0.0, 30.0};
    o.storage_power_gw = {0.0, 15.0};
    o.storage_energy_gwh = {0.0, 200.0};
    o.link_gw = {0.0, 10.0};
    o.population = 50;
    o.generations = 500;
    o.convergence_window = 80;
    o.convergence_tolerance = 1e-6;
    return s;
}

void write_trace_csv(const TraceSet& traces, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "timestamp";
    for (const auto& [id, ts] : traces.series()) out << ',' << id;
    out << '\n';
    char buf[32];
    for (std::size_t t = 0; t < traces.horizon(); ++t) {
        out << format_timestamp(traces.start() + kHalfHour * static_cast<long>(t));
        for (const auto& [id, ts] : traces.series()) {
            std::snprintf(buf, sizeof buf, "%.10g", ts.values[t]);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

void write_profile_csv(const ProfileSet& profiles, const std::filesystem::path& path) {
    if (profiles.empty()) throw Error("no profiles to write");
    const std::size_t rows = profiles.begin()->second.size();
    for (const auto& [id, w] : profiles)
        if (w.size() != rows) throw Error("profile '" + id + "' length differs from the others");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "slot";
    for (const auto& [id, w] : profiles) out << ',' << id;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < rows; ++i) {
        out << i;
        for (const auto& [id, w] : profiles) {
            std::snprintf(buf, sizeof buf, "%.17g", w[i]);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::filesystem::path write_preset_files(PresetKind kind, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto data = make_desk_dataset();
    write_trace_csv(data.traces, dir / kPresetTraceFile);
    write_profile_csv(data.profiles, dir / kPresetProfileFile);
    const auto path = dir / (to_string(kind) + ".yaml");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << render_scenario(make_preset_scenario(kind));
    if (!out) throw Error("failed writing '" + path.string() + "'");
    return path;
}

}  // namespace gridsim
