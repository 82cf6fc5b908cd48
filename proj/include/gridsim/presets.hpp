#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "gridsim/scenario.hpp"
#include "gridsim/traces.hpp"

namespace gridsim {

/// Scenario families: isolated regional grids, an HVDC-interconnected grid,
/// and the interconnected grid with flexible EV charging.
enum class PresetKind { SevenGrids, SuperGrid, SmartGrid };

std::string to_string(PresetKind k);
std::optional<PresetKind> preset_from_string(std::string_view name);

struct DeskDataset {
    TraceSet traces;
    ProfileSet profiles;
};

/// Synthetic three-region dataset (anti-correlated wind between the two
/// outer regions) at desk scale.
DeskDataset make_desk_dataset(std::uint64_t seed = 2020, std::size_t days = 28);

/// Scenario for a preset, referencing the dataset file names written by
/// write_preset_files.
Scenario make_preset_scenario(PresetKind kind);

inline constexpr std::string_view kPresetTraceFile = "desk3_traces.csv";
inline constexpr std::string_view kPresetProfileFile = "desk3_profiles.csv";

/// Writes <dir>/<preset>.yaml plus the shared trace and profile CSVs.
std::filesystem::path write_preset_files(PresetKind kind, const std::filesystem::path& dir);

void write_trace_csv(const TraceSet& traces, const std::filesystem::path& path);
void write_profile_csv(const ProfileSet& profiles, const std::filesystem::path& path);

}  // namespace gridsim
