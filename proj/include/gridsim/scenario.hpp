#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridsim/demand.hpp"
#include "gridsim/error.hpp"
#include "gridsim/traces.hpp"

namespace gridsim {

inline constexpr int kScenarioSchemaVersion = 1;

struct Region {
    std::string id;
    std::vector<std::string> zones;
    bool has_hydro_bio = false;
    double hydro_bio_power_cap_gw = 0.0;
    double hydro_bio_annual_cap_twh = 0.0;

    bool operator==(const Region&) const = default;
};

struct Zone {
    std::string id;
    std::string region;
    std::string pv_trace;
    std::string wind_trace;
    std::optional<double> hvac_connection_cost_per_kw;  // falls back to costs.hvac

    bool operator==(const Zone&) const = default;
};

enum class LinkKind { Overhead, Submarine };

struct Interconnector {
    std::string id;
    std::string from_region;
    std::string to_region;
    double length_km = 0.0;
    LinkKind kind = LinkKind::Overhead;
    double reserve_fraction = 0.25;
    double existing_gw = 0.0;  // free capacity already in place

    bool operator==(const Interconnector&) const = default;
};

struct GeneratorCost {
    double capital_per_kw = 0.0;
    double fom_per_kw_yr = 0.0;
    double vom_per_mwh = 0.0;
    double lifetime_years = 25.0;

    bool operator==(const GeneratorCost&) const = default;
};

struct StorageCost {
    double power_per_kw = 800.0;
    double energy_per_kwh = 70.0;
    double fom_per_kw_yr = 10.0;
    double vom_per_mwh = 0.0;
    double lifetime_years = 50.0;

    bool operator==(const StorageCost&) const = default;
};

struct HvdcOverheadCost {
    double line_per_mw_km = 320.0;
    double converter_per_mw = 160000.0;
    double lifetime_years = 50.0;

    bool operator==(const HvdcOverheadCost&) const = default;
};

struct HvdcSubmarineCost {
    double capital_per_kw = 4000.0;
    double lifetime_years = 50.0;

    bool operator==(const HvdcSubmarineCost&) const = default;
};

struct HvacCost {
    double capital_per_kw = 1500.0;
    double lifetime_years = 50.0;
    // Share of storage power that also pays for an AC connection.
    double storage_multiplier = 0.0;

    bool operator==(const HvacCost&) const = default;
};

struct TechnologyCosts {
    GeneratorCost pv{1600.0, 18.0, 0.0, 25.0};
    GeneratorCost wind{1800.0, 36.0, 3.0, 25.0};
    StorageCost storage;
    HvdcOverheadCost hvdc_overhead;
    HvdcSubmarineCost hvdc_submarine;
    HvacCost hvac;
    double discount_rate_real = 0.05;
    double hydro_bio_price_per_mwh = 50.0;

    bool operator==(const TechnologyCosts&) const = default;
};

struct ScenarioFlags {
    bool interconnection_enabled = true;
    bool ev_flexibility_enabled = false;
    double ev_flexible_share = 0.80;
    double ev_min_soc = 0.25;
    // One annual hydro/bio budget pooled across all regions.
    bool hydro_bio_shared_budget = false;

    bool operator==(const ScenarioFlags&) const = default;
};

struct DispatchSettings {
    double storage_round_trip = 0.80;
    double initial_soc_fraction = 0.5;
    double ev_lookahead_hours = 24.0;
    int burn_in_years = 0;

    bool operator==(const DispatchSettings&) const = default;
};

struct VariableBounds {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const VariableBounds&) const = default;
};

/// Search-space settings stored with the scenario.
struct OptimizerSettings {
    VariableBounds pv_gw{0.0, 50.0};
    VariableBounds wind_gw{0.0, 50.0};
    VariableBounds storage_power_gw{0.0, 20.0};
    VariableBounds storage_energy_gwh{0.0, 400.0};
    VariableBounds link_gw{0.0, 20.0};
    // Per-item overrides keyed "<kind>:<id>", e.g. "pv_gw:Z1".
    std::map<std::string, VariableBounds> item_bounds;
    std::size_t population = 0;  // 0 = 10 x dimension
    std::size_t generations = 100;
    double differential_weight = 0.8;
    double crossover_rate = 0.9;
    double penalty_weight = 1e6;
    std::size_t convergence_window = 50;
    double convergence_tolerance = 1e-7;

    bool operator==(const OptimizerSettings&) const = default;
};

struct Scenario {
    int schema_version = kScenarioSchemaVersion;
    std::string id;
    std::vector<Region> regions;
    std::vector<Zone> zones;
    std::vector<Interconnector> interconnectors;
    TechnologyCosts costs;
    ScenarioFlags flags;
    DispatchSettings dispatch;
    DemandSpec demand;
    OptimizerSettings optimizer;
    double reliability_limit = 0.00002;
    std::vector<std::string> trace_files;    // relative to base_dir
    std::vector<std::string> profile_files;  // relative to base_dir
    bool resample_traces = false;
    std::filesystem::path base_dir;  // not serialised

    std::optional<std::size_t> region_index(std::string_view id) const;
    std::optional<std::size_t> zone_index(std::string_view id) const;
    std::vector<std::string> region_ids() const;

    bool operator==(const Scenario&) const = default;
};

/// Parses YAML scenario text. Unknown keys and type mismatches raise
/// ParseError with the offending key and line; references to undeclared
/// regions raise ValidationError.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Emits YAML that parse_scenario reads back to an equivalent Scenario.
std::string render_scenario(const Scenario& s);

/// Every domain invariant; empty result means valid.
std::vector<Violation> validate_scenario(const Scenario& s);

/// Non-fatal sanity notes (e.g. implausibly long lines whose loss is capped).
std::vector<Violation> scenario_warnings(const Scenario& s);

struct TopologyEdge {
    std::size_t link = 0;  // index into Scenario::interconnectors
    std::size_t from = 0;
    std::size_t to = 0;
    double loss_rate = 0.0;
};

struct Topology {
    std::vector<std::string> nodes;
    std::vector<TopologyEdge> edges;
    // Edge indices touching each node, ordered by interconnector id.
    std::vector<std::vector<std::size_t>> incident;

    std::size_t node_count() const noexcept { return nodes.size(); }
    bool connected() const;
};

/// Region graph. With interconnection disabled every region is isolated.
Topology build_topology(const Scenario& s);

/// Traces and profiles referenced by the scenario, loaded from disk.
/// Zone traces are checked as capacity factors.
struct ScenarioData {
    TraceSet traces;
    ProfileSet profiles;
    std::size_t clamped_cells = 0;
};

ScenarioData load_scenario_data(const Scenario& s);

}  // namespace gridsim
