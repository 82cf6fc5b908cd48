#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridsim {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::chrono::minutes kHalfHour{30};
inline constexpr double kIntervalHours = 0.5;
inline constexpr std::size_t kIntervalsPerDay = 48;
inline constexpr double kHoursPerYear = 8760.0;

/// Clamp tolerance for capacity-factor cells: values in (1, 1 + eps] are
/// clamped to 1, anything larger is rejected.
inline constexpr double kCapacityFactorTolerance = 0.05;

struct TimeSeries {
    Timestamp start{};
    std::chrono::minutes step{kHalfHour};
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

enum class SeriesKind { CapacityFactor, Power };

struct LoadedTrace {
    TimeSeries series;
    std::size_t clamped = 0;  // CF cells above 1 that were clamped
};

/// Parses "YYYY-MM-DD[T ]HH:MM[:SS]" (an optional trailing 'Z' is accepted).
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

/// Reads every series column of a trace CSV. Timestamps must be strictly
/// increasing and equally spaced; the step is whatever the file uses.
std::map<std::string, TimeSeries> read_trace_table(const std::filesystem::path& path);

/// Loads one half-hourly column. An hourly (or coarser) file is rejected
/// unless `resample` is set, in which case it is interpolated down to 30 min.
LoadedTrace load_trace_csv(const std::filesystem::path& path, std::string_view column,
                           SeriesKind kind = SeriesKind::CapacityFactor, bool resample = false);

/// Applies the capacity-factor bounds in place; returns the clamp count.
/// Throws TraceError for negative values or values above 1 + tolerance.
std::size_t clamp_capacity_factor(TimeSeries& ts, std::string_view id);

/// Linear interpolation from an N x 30 min step down to 30 min. The last
/// value is repeated so the output covers the same span (length k * n).
TimeSeries resample_half_hourly(const TimeSeries& ts);

enum class SynthKind { Solar, Wind, Demand };

struct SynthSpec {
    SynthKind kind = SynthKind::Wind;
    std::uint64_t seed = 1;
    Timestamp start{};
    std::size_t horizon = 0;
    double mean_cf = 0.3;
    double diurnal_amplitude = 0.0;
    double noise = 0.0;
    // Solar output is forced to zero outside [daylight_start_h, daylight_end_h).
    double daylight_start_h = 6.0;
    double daylight_end_h = 18.0;
    // Lag-one autocorrelation of the per-interval noise process.
    double persistence = 0.995;
    // Optional shared weather factor (unit variance) and the loading on it;
    // opposite-signed loadings give anti-correlated traces.
    std::span<const double> common_factor{};
    double common_loading = 0.0;
};

/// Deterministic synthetic half-hourly trace. Wind and solar are capacity
/// factors in [0, 1]; demand is a dimensionless shape with the requested mean.
TimeSeries synth_trace(const SynthSpec& spec);

/// Unit-variance AR(1) process, used as a shared weather driver.
std::vector<double> synth_factor(std::uint64_t seed, std::size_t horizon, double persistence);

/// Aligned set of half-hourly series sharing start, step and length.
class TraceSet {
public:
    TraceSet() = default;

    std::size_t horizon() const noexcept { return horizon_; }
    Timestamp start() const noexcept { return start_; }
    std::size_t size() const noexcept { return series_.size(); }
    bool contains(const std::string& id) const { return series_.count(id) != 0; }

    /// Throws TraceError naming the id when it is absent.
    const TimeSeries& at(const std::string& id) const;
    const std::map<std::string, TimeSeries>& series() const noexcept { return series_; }

private:
    friend TraceSet align(std::vector<std::pair<std::string, TimeSeries>> traces);
    std::map<std::string, TimeSeries> series_;
    Timestamp start_{};
    std::size_t horizon_ = 0;
};

TraceSet align(std::vector<std::pair<std::string, TimeSeries>> traces);

/// Weight profiles: either 48 daily weights or a yearly 17,520-row table.
using ProfileSet = std::map<std::string, std::vector<double>>;

/// Reads a profile CSV. First column is a slot index or timestamp; each
/// remaining column is one profile.
ProfileSet read_profile_csv(const std::filesystem::path& path);

/// Number of half-hour intervals from `first` to `last` inclusive (dates).
std::size_t interval_count(std::chrono::year_month_day first, std::chrono::year_month_day last);

/// Calendar year of every interval, plus bookkeeping used by dispatch.
struct Calendar {
    std::vector<std::uint16_t> year_index;   // index into `years` per interval
    std::vector<std::uint16_t> day_of_year;  // 0-based
    std::vector<std::uint8_t> slot;          // half-hour of day, 0..47
    std::vector<int> years;                  // distinct calendar years in order

    static Calendar build(Timestamp start, std::size_t horizon);
    std::size_t size() const noexcept { return slot.size(); }
};

int days_in_year(int year);

}  // namespace gridsim
