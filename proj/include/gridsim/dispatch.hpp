#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gridsim/demand.hpp"
#include "gridsim/network.hpp"
#include "gridsim/scenario.hpp"
#include "gridsim/traces.hpp"

namespace gridsim {

/// Capacity decision vector. Vectors are indexed in scenario order:
/// zones, regions and interconnectors respectively.
struct Portfolio {
    std::vector<double> pv_gw;
    std::vector<double> wind_gw;
    std::vector<double> storage_power_gw;
    std::vector<double> storage_energy_gwh;
    std::vector<double> link_gw;

    static Portfolio zeros(const Scenario& s);
    bool operator==(const Portfolio&) const = default;
};

/// Stable flat layout: [pv per zone, wind per zone, storage power per
/// region, storage energy per region, link capacity per interconnector].
std::vector<double> to_vector(const Portfolio& p);
Portfolio portfolio_from_vector(const Scenario& s, std::span<const double> x);
std::size_t decision_dimension(const Scenario& s);

/// Checks shape, non-negativity and storage_energy >= 0.5 h of power.
std::vector<Violation> validate_portfolio(const Scenario& s, const Portfolio& p);

// ---------------------------------------------------------------------------
// Storage

struct StorageState {
    double soc_gwh = 0.0;
    double energy_cap_gwh = 0.0;
    double power_cap_gw = 0.0;
    double charge_eff = 0.0;
    double discharge_eff = 0.0;

    static StorageState with_round_trip(double power_gw, double energy_gwh, double round_trip,
                                        double soc_fraction);
};

enum class StorageDirection { Charge, Discharge };

struct StorageStep {
    StorageState state;
    double accepted_gw = 0.0;
};

/// Grid-side power the store can take / give this interval.
double storage_charge_limit(const StorageState& s);
double storage_discharge_limit(const StorageState& s);

StorageStep storage_update(const StorageState& s, double request_gw, StorageDirection dir);

// ---------------------------------------------------------------------------
// Flexible EV aggregate

struct EVAggregateState {
    double soc_gwh = 0.0;
    double capacity_gwh = 0.0;
    double max_charge_gw = 0.0;
    double min_soc_fraction = 0.25;
    double charge_eff = 0.85;

    double floor_gwh() const noexcept { return min_soc_fraction * capacity_gwh; }
};

/// Smallest grid-side charge this interval that keeps the projected SoC at
/// or above the floor over `draws_gw` (battery-side driving draw for this
/// and following intervals), assuming full-rate charging afterwards.
double ev_forced_charge(const EVAggregateState& ev, std::span<const double> draws_gw);

/// Largest grid-side charge this interval without overfilling, given the
/// battery draw of this interval.
double ev_charge_headroom(const EVAggregateState& ev, double draw_gw);

/// Charge decision for one interval: opportunistic in surplus, deferred in
/// deficit, forced when the floor would otherwise be breached.
double ev_flexible_charge(const EVAggregateState& ev, double surplus_gw, double deficit_gw,
                          std::span<const double> draws_gw);

struct EVStepOutcome {
    EVAggregateState state;
    double shortfall_gw = 0.0;  // grid-equivalent driving energy that could not be supplied
};

/// Applies a grid-side charge and this interval's draw. The end-of-interval
/// SoC never falls below the floor; undeliverable draw becomes shortfall.
EVStepOutcome ev_apply(const EVAggregateState& ev, double charge_gw, double draw_gw);

// ---------------------------------------------------------------------------
// Hydro / bio

struct HydroBioBudget {
    double power_cap_gw = 0.0;
    double annual_cap_twh = 0.0;
    double year_to_date_twh = 0.0;

    double remaining_gwh() const noexcept;
    void start_new_year() noexcept { year_to_date_twh = 0.0; }
};

/// Power available this interval without touching the budget.
double hydro_bio_limit(const HydroBioBudget& b);

/// Dispatches min(residual, cap, remaining / 0.5 h) and charges the budget.
double hydro_bio_dispatch(HydroBioBudget& b, double residual_deficit_gw);

// ---------------------------------------------------------------------------
// Model

/// Scenario, traces and composed demand bound together for repeated
/// simulation. Immutable after construction.
struct DispatchModel {
    std::shared_ptr<const Scenario> scenario;
    Topology topology;
    Calendar calendar;
    Timestamp start{};
    std::size_t horizon = 0;
    std::vector<std::vector<double>> inflexible_gw;  // region x t
    std::vector<std::vector<double>> ev_gw;          // region x t, grid side
    std::vector<double> ev_capacity_gwh;
    std::vector<double> ev_max_charge_gw;
    std::vector<double> ev_charge_eff;
    std::vector<std::vector<double>> pv_cf;    // zone x t
    std::vector<std::vector<double>> wind_cf;  // zone x t
    std::vector<std::size_t> zone_region;

    std::size_t region_count() const noexcept { return inflexible_gw.size(); }
    double years() const noexcept { return static_cast<double>(horizon) * kIntervalHours / kHoursPerYear; }
};

DispatchModel build_dispatch_model(const Scenario& s, const TraceSet& traces,
                                   const ProfileSet& profiles = {});

/// Single-region model slice with a matching one-region scenario.
DispatchModel restrict_to_region(const DispatchModel& m, std::size_t region);

/// Same model with different cost assumptions (dispatch is cost-blind).
DispatchModel with_costs(const DispatchModel& m, const TechnologyCosts& costs);

// ---------------------------------------------------------------------------
// Interval balance

struct RegionInterval {
    double demand = 0.0;  // inflexible demand
    double vre_available = 0.0;
    double vre_used = 0.0;
    double pv_used = 0.0;
    double wind_used = 0.0;
    double storage_charge = 0.0;
    double storage_discharge = 0.0;
    double hydro_bio = 0.0;
    double ev_charge = 0.0;
    double ev_requirement = 0.0;  // grid-side EV energy need this interval
    double net_import = 0.0;
    double spill = 0.0;
    double unserved = 0.0;
    double ev_shortfall = 0.0;
    double storage_soc = 0.0;
    double ev_soc = 0.0;
};

struct LinkInterval {
    double flow_gw = 0.0;  // net send, positive from -> to
    double send_gw = 0.0;  // gross send, both directions
    double loss_gw = 0.0;
};

struct IntervalResult {
    std::vector<RegionInterval> regions;
    std::vector<LinkInterval> links;  // indexed like Scenario::interconnectors
};

/// Mutable state carried across intervals.
struct SystemState {
    std::vector<StorageState> storage;
    std::vector<EVAggregateState> ev;
    std::vector<HydroBioBudget> hydro;  // per region
    HydroBioBudget shared_hydro;        // used when the budget is pooled
    int current_year = 0;
};

/// Per-interval exogenous inputs.
struct IntervalInputs {
    std::vector<double> demand_gw;         // inflexible, per region
    std::vector<double> vre_gw;            // per region
    std::vector<double> pv_gw;             // per region (subset of vre)
    std::vector<std::span<const double>> ev_draw_window;  // battery side, per region
    std::vector<double> ev_fixed_gw;       // grid-side EV load when inflexible
};

/// Static per-run context.
struct DispatchContext {
    const Topology* topology = nullptr;
    std::vector<double> edge_capacity;  // per topology edge
    bool ev_flexible = false;
    bool shared_hydro = false;
};

/// Applies the merit order for one interval. `out` is resized as needed.
void step_interval(const DispatchContext& ctx, SystemState& state, const IntervalInputs& in,
                   IntervalResult& out, FlowWorkspace& ws);

// ---------------------------------------------------------------------------
// Simulation

struct RegionTotals {
    double demand_gwh = 0.0;  // inflexible + EV requirement
    double vre_available_gwh = 0.0;
    double vre_used_gwh = 0.0;
    double pv_used_gwh = 0.0;
    double wind_used_gwh = 0.0;
    double storage_charge_gwh = 0.0;
    double storage_discharge_gwh = 0.0;
    double hydro_bio_gwh = 0.0;
    double ev_charge_gwh = 0.0;
    double import_gwh = 0.0;
    double export_gwh = 0.0;
    double spill_gwh = 0.0;
    double unserved_gwh = 0.0;  // includes EV shortfall
    double peak_discharge_gw = 0.0;
    double min_ev_soc_fraction = 1.0;

    void add(const RegionTotals& o);
};

struct YearTotals {
    int year = 0;
    std::size_t intervals = 0;
    std::vector<RegionTotals> regions;
    double loss_gwh = 0.0;
    double worst_unserved_gw = 0.0;
};

struct SimulateOptions {
    bool record_intervals = false;
    int burn_in_years = -1;  // < 0: use the scenario setting
};

struct DispatchResult {
    std::vector<YearTotals> years;   // counted years only (after burn-in)
    std::size_t first_interval = 0;  // first counted interval
    std::size_t counted_intervals = 0;
    double counted_years = 0.0;
    std::vector<IntervalResult> intervals;  // all intervals when recorded

    RegionTotals system_totals() const;
    std::vector<RegionTotals> region_totals() const;
    double loss_gwh() const;
};

DispatchResult simulate(const DispatchModel& model, const Portfolio& portfolio,
                        const SimulateOptions& opts = {});

DispatchResult simulate(const Scenario& s, const Portfolio& portfolio, const TraceSet& traces,
                        const ProfileSet& profiles = {}, const SimulateOptions& opts = {});

struct ReliabilityReport {
    double overall_fraction = 0.0;
    std::vector<int> years;
    std::vector<double> year_fraction;
    double worst_interval_gw = 0.0;
};

ReliabilityReport reliability(const DispatchResult& dr);

}  // namespace gridsim
