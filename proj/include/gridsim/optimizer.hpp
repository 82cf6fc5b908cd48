#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridsim/cost.hpp"
#include "gridsim/dispatch.hpp"

namespace gridsim {

using Bounds = VariableBounds;

struct DEConfig {
    std::size_t population_size = 0;  // 0 = 10 x dimension (at least 4)
    std::size_t generations = 100;
    double differential_weight = 0.8;
    double crossover_rate = 0.9;
    std::uint64_t seed = 1;
    std::vector<Bounds> bounds;
    std::size_t convergence_window = 0;  // 0 disables the convergence stop
    double convergence_tolerance = 1e-9;
    std::size_t threads = 1;
    std::optional<std::filesystem::path> checkpoint;
    // Warm start; padded with random individuals up to the population size.
    std::vector<std::vector<double>> initial_population;

    std::size_t dimension() const noexcept { return bounds.size(); }
    std::size_t effective_population() const noexcept;
};

enum class StopReason { Generations, Converged, Stagnated };
std::string to_string(StopReason r);

struct DEResult {
    std::vector<double> best;
    double best_value = 0.0;
    std::vector<double> history;  // best value after each generation (index 0 = initial)
    std::size_t generations = 0;
    std::size_t evaluations = 0;
    StopReason stop = StopReason::Generations;
};

/// Must be safe to call concurrently from several threads.
using Objective = std::function<double(std::span<const double>)>;

struct GenerationReport {
    std::size_t generation = 0;
    double best_value = 0.0;
    std::size_t evaluations = 0;
};

/// DE/rand/1/bin with reflection at the bounds and greedy selection. Trial
/// vectors are drawn sequentially from the seeded generator and evaluated in
/// parallel, so results do not depend on the thread count.
DEResult de_optimize(const DEConfig& config, const Objective& objective,
                     const std::function<void(const GenerationReport&)>& progress = {});

/// Folds x back into [lo, hi] by mirroring at the violated bound.
double reflect_into(double x, Bounds b);

// ---------------------------------------------------------------------------
// Portfolio evaluation

struct Fitness {
    double lcoe = 0.0;
    double unserved_fraction = 0.0;
    double penalty = 0.0;
    double total = 0.0;
};

double reliability_penalty(double unserved_fraction, double limit, double weight);

struct Evaluation {
    Portfolio portfolio;
    Fitness fitness;
    CostBreakdown costs;
    EnergyBasis energy;
    ReliabilityReport reliability;
    DispatchResult dispatch;
};

Evaluation evaluate_detailed(const DispatchModel& model, const Portfolio& p,
                             const SimulateOptions& opts = {});
Fitness evaluate(const DispatchModel& model, const Portfolio& p);

/// Bounds for every decision variable in layout order.
std::vector<Bounds> decision_bounds(const Scenario& s);

/// Reconciles a raw decision vector with the portfolio invariants: storage
/// power is limited to two times the storage energy.
Portfolio decode_portfolio(const Scenario& s, std::span<const double> x);

struct RegionRun {
    std::string region;
    DEResult de;
    Fitness fitness;
};

struct OptimizationResult {
    Portfolio best;
    Fitness fitness;
    DEResult de;                  // joint run (empty when decomposed)
    std::vector<RegionRun> regions;  // per-region runs for isolated grids
    bool decomposed = false;
};

/// DE settings from the scenario, with the given seed and thread count.
DEConfig de_config_for(const Scenario& s, std::uint64_t seed, std::size_t threads);

/// Optimises the portfolio. Isolated multi-region scenarios are solved one
/// region at a time (they are separable) and recombined.
OptimizationResult optimize_portfolio(const DispatchModel& model, const DEConfig& base,
                                      const std::function<void(const std::string&, const GenerationReport&)>& progress = {});

// ---------------------------------------------------------------------------
// Sensitivity

enum class CostParameter {
    PvCapital,
    WindCapital,
    StorageCapital,
    HvdcCapital,
    HvacCapital,
    HydroBioPrice,
    DiscountRate,
};

std::string to_string(CostParameter p);
std::optional<CostParameter> cost_parameter_from_string(std::string_view name);
std::vector<CostParameter> all_cost_parameters();

TechnologyCosts scale_cost(const TechnologyCosts& c, CostParameter p, double multiplier);

struct SensitivityRow {
    CostParameter parameter;
    double multiplier = 1.0;
    double lcoe = 0.0;
    double delta = 0.0;  // lcoe - baseline lcoe
};

struct SensitivityOptions {
    std::vector<CostParameter> parameters = all_cost_parameters();
    std::size_t steps = 3;  // evenly spaced over [0.75, 1.25]
    bool reoptimize = false;
    DEConfig de;  // used when reoptimising
};

std::vector<double> sensitivity_multipliers(std::size_t steps);

/// Rows ordered tornado-style: largest LCOE swing first.
std::vector<SensitivityRow> sensitivity_sweep(const DispatchModel& model, const Portfolio& p,
                                              const SensitivityOptions& opts);

}  // namespace gridsim
