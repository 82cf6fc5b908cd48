#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gridsim/cost.hpp"
#include "gridsim/dispatch.hpp"
#include "gridsim/optimizer.hpp"

namespace gridsim {

/// Rounds to six significant digits, the precision used in summaries.
double round_sig6(double x);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Hash over the scenario file and every trace/profile file it references.
std::string input_content_hash(const Scenario& s, std::string_view scenario_text);

struct NamedValues {
    std::vector<std::string> ids;
    std::vector<double> values;
    bool operator==(const NamedValues&) const = default;
};

struct RunSummary {
    std::string scenario_id;
    std::string command;  // simulate / optimize
    std::uint64_t seed = 0;
    std::string input_hash;

    NamedValues pv_gw;
    NamedValues wind_gw;
    NamedValues storage_power_gw;
    NamedValues storage_energy_gwh;
    NamedValues link_gw;

    double lcoe = 0.0;
    double lcog = 0.0;
    double lcob_storage = 0.0;
    double lcob_transmission = 0.0;
    double lcob_spill_loss = 0.0;
    double identity_residual = 0.0;

    double annual_pv_musd = 0.0;
    double annual_wind_musd = 0.0;
    double annual_storage_musd = 0.0;
    double annual_hvdc_musd = 0.0;
    double annual_hvac_musd = 0.0;
    double annual_vom_musd = 0.0;
    double annual_hydro_bio_musd = 0.0;

    double storage_power_total_gw = 0.0;
    double storage_energy_total_gwh = 0.0;

    double unserved_fraction = 0.0;
    double worst_interval_unserved_gw = 0.0;
    std::vector<int> years;
    std::vector<double> year_unserved_fraction;
    double reliability_limit = 0.0;

    double share_pv = 0.0;
    double share_wind = 0.0;
    double share_hydro_bio = 0.0;

    double demand_twh_per_year = 0.0;
    double delivered_twh_per_year = 0.0;
    double spill_twh_per_year = 0.0;
    double loss_twh_per_year = 0.0;

    double penalty = 0.0;
    double fitness_total = 0.0;

    std::size_t generations = 0;
    std::size_t evaluations = 0;
    std::string stop_reason;
    std::vector<double> history;

    bool operator==(const RunSummary&) const = default;
};

/// Assembles a summary from an evaluation. Values are rounded to six
/// significant digits.
RunSummary make_summary(const Scenario& s, const Evaluation& ev, std::string command,
                        std::uint64_t seed, std::string input_hash);

std::string summary_to_json(const RunSummary& rs);
RunSummary summary_from_json(std::string_view text);
void write_summary(const RunSummary& rs, const std::filesystem::path& path);
RunSummary read_summary(const std::filesystem::path& path);

/// Portfolio files are JSON objects keyed by category then id; a summary
/// file is also accepted.
Portfolio read_portfolio(const Scenario& s, const std::filesystem::path& path);
std::string portfolio_to_json(const Scenario& s, const Portfolio& p);

struct IntervalWindow {
    std::size_t first = 0;
    std::size_t count = 0;
};

/// One row per interval with per-region ledger columns. Requires recorded
/// intervals; throws Error if the window exceeds the horizon.
void write_dispatch_csv(const DispatchModel& model, const DispatchResult& dr, IntervalWindow window,
                        const std::filesystem::path& path);

struct BalanceCheck {
    std::size_t rows = 0;
    double max_residual_gw = 0.0;
};

/// Re-reads a dispatch CSV and recomputes the per-region balance identity.
BalanceCheck verify_dispatch_csv(const std::filesystem::path& path);

/// Human-readable rendering of a summary.
std::string format_summary(const RunSummary& rs);

}  // namespace gridsim
