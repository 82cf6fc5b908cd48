#include "gridsim/traces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "csv.hpp"
#include "gridsim/error.hpp"

namespace gridsim {

using namespace std::chrono;

namespace {

bool parse_int(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string minutes_text(minutes m) { return std::to_string(m.count()) + " min"; }

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    text = detail::trim(text);
    if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) text.remove_suffix(1);
    auto fail = [&]() -> Timestamp { throw TraceError("invalid timestamp '" + std::string(text) + "'"); };
    if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':')
        return fail();
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
        !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), h) ||
        !parse_int(text.substr(14, 2), mi))
        return fail();
    if (text.size() > 16) {
        if (text.size() != 19 || text[16] != ':' || !parse_int(text.substr(17, 2), s)) return fail();
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return fail();
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp t) {
    auto dp = floor<days>(t);
    year_month_day ymd{dp};
    hh_mm_ss hms{t - dp};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()));
    return buf;
}

std::map<std::string, TimeSeries> read_trace_table(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    const auto lines = detail::split_lines(text);
    const std::string where = path.string();
    if (lines.empty()) throw TraceError(where + ": empty file");

    const auto header = detail::split_row(lines[0]);
    if (header.size() < 2) throw TraceError(where + ": need a timestamp column and at least one series");
    std::vector<std::string> names;
    for (std::size_t c = 1; c < header.size(); ++c) names.emplace_back(header[c]);

    std::vector<std::vector<double>> columns(names.size());
    std::vector<Timestamp> stamps;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (detail::trim(lines[row]).empty()) continue;
        const auto cells = detail::split_row(lines[row]);
        const std::size_t line_no = row + 1;
        if (cells.size() != header.size())
            throw TraceError(where + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(header.size()));
        Timestamp ts;
        try {
            ts = parse_timestamp(cells[0]);
        } catch (const TraceError& e) {
            throw TraceError(where + ": row " + std::to_string(line_no) + ": " + e.what());
        }
        for (std::size_t c = 1; c < cells.size(); ++c) {
            auto v = detail::parse_double(cells[c]);
            if (!v)
                throw TraceError(where + ": row " + std::to_string(line_no) + ", column '" + names[c - 1] +
                                 "': non-numeric value '" + std::string(cells[c]) + "'");
            columns[c - 1].push_back(*v);
        }
        if (!stamps.empty()) {
            if (ts <= stamps.back())
                throw TraceError(where + ": row " + std::to_string(line_no) + ": timestamps not strictly increasing");
            if (stamps.size() >= 2) {
                const auto step = stamps[1] - stamps[0];
                if (ts - stamps.back() != step)
                    throw TraceError(where + ": gap at row " + std::to_string(line_no) + " (" +
                                     format_timestamp(stamps.back()) + " -> " + format_timestamp(ts) + ")");
            }
        }
        stamps.push_back(ts);
    }
    if (stamps.empty()) throw TraceError(where + ": no data rows");

    minutes step = kHalfHour;
    if (stamps.size() >= 2) {
        const auto diff = stamps[1] - stamps[0];
        if (diff % minutes{1} != seconds{0}) throw TraceError(where + ": step is not a whole number of minutes");
        step = duration_cast<minutes>(diff);
    }
    std::map<std::string, TimeSeries> out;
    for (std::size_t c = 0; c < names.size(); ++c) {
        TimeSeries ts{stamps.front(), step, std::move(columns[c])};
        if (!out.emplace(names[c], std::move(ts)).second)
            throw TraceError(where + ": duplicate column '" + names[c] + "'");
    }
    return out;
}

std::size_t clamp_capacity_factor(TimeSeries& ts, std::string_view id) {
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < ts.values.size(); ++i) {
        double& v = ts.values[i];
        if (v > 1.0 + kCapacityFactorTolerance || v < -kCapacityFactorTolerance || !std::isfinite(v))
            throw TraceError("trace '" + std::string(id) + "': capacity factor " + std::to_string(v) +
                             " at index " + std::to_string(i) + " outside [0, 1] (unit mistake?)");
        if (v > 1.0) {
            v = 1.0;
            ++clamped;
        } else if (v < 0.0) {
            v = 0.0;
            ++clamped;
        }
    }
    return clamped;
}

LoadedTrace load_trace_csv(const std::filesystem::path& path, std::string_view column, SeriesKind kind,
                           bool resample) {
    auto table = read_trace_table(path);
    auto it = table.find(std::string(column));
    if (it == table.end())
        throw TraceError(path.string() + ": no column '" + std::string(column) + "'");
    LoadedTrace out{std::move(it->second), 0};
    if (out.series.step != kHalfHour) {
        if (!resample)
            throw TraceError(path.string() + ": step is " + std::to_string(out.series.step.count()) +
                             " min, expected 30 (resample first)");
        out.series = resample_half_hourly(out.series);
    }
    if (kind == SeriesKind::CapacityFactor) out.clamped = clamp_capacity_factor(out.series, column);
    return out;
}

TimeSeries resample_half_hourly(const TimeSeries& ts) {
    if (ts.step.count() <= 0 || ts.step % kHalfHour != minutes{0})
        throw TraceError("cannot resample: step " + minutes_text(ts.step) + " is not a multiple of 30 min");
    const auto k = static_cast<std::size_t>(ts.step / kHalfHour);
    if (k == 1) return ts;
    TimeSeries out{ts.start, kHalfHour, {}};
    const auto n = ts.values.size();
    out.values.reserve(n * k);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = ts.values[i];
        const double b = ts.values[i + 1];
        for (std::size_t j = 0; j < k; ++j) {
            const double w = static_cast<double>(j) / static_cast<double>(k);
            out.values.push_back(j == 0 ? a : a + (b - a) * w);
        }
    }
    if (n > 0) out.values.insert(out.values.end(), k, ts.values.back());
    return out;
}

std::vector<double> synth_factor(std::uint64_t seed, std::size_t horizon, double persistence) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double phi = std::clamp(persistence, 0.0, 0.999999);
    const double innov = std::sqrt(1.0 - phi * phi);
    std::vector<double> z(horizon);
    double x = normal(rng);
    for (std::size_t t = 0; t < horizon; ++t) {
        if (t > 0) x = phi * x + innov * normal(rng);
        z[t] = x;
    }
    return z;
}

TimeSeries synth_trace(const SynthSpec& spec) {
    TimeSeries out{spec.start, kHalfHour, std::vector<double>(spec.horizon, 0.0)};
    if (spec.horizon == 0) return out;

    auto z = synth_factor(spec.seed, spec.horizon, spec.persistence);
    if (!spec.common_factor.empty()) {
        const double rho = std::clamp(spec.common_loading, -1.0, 1.0);
        const double own = std::sqrt(1.0 - rho * rho);
        for (std::size_t t = 0; t < spec.horizon; ++t)
            z[t] = rho * spec.common_factor[t % spec.common_factor.size()] + own * z[t];
    }

    const Calendar cal = Calendar::build(spec.start, spec.horizon);
    const double amp = spec.diurnal_amplitude;
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> base(spec.horizon);
    for (std::size_t t = 0; t < spec.horizon; ++t) {
        const double hour = (cal.slot[t] + 0.5) * kIntervalHours;
        double shape = 1.0;
        switch (spec.kind) {
            case SynthKind::Solar: {
                const double span = spec.daylight_end_h - spec.daylight_start_h;
                if (hour < spec.daylight_start_h || hour >= spec.daylight_end_h || span <= 0.0) {
                    shape = 0.0;
                } else {
                    const double hump = std::sin(std::numbers::pi * (hour - spec.daylight_start_h) / span);
                    shape = (1.0 - amp) + amp * hump * std::numbers::pi / 2.0;
                }
                break;
            }
            case SynthKind::Wind:
                shape = 1.0 + amp * std::cos(two_pi * hour / 24.0);
                break;
            case SynthKind::Demand:
                shape = 1.0 + amp * (std::cos(two_pi * (hour - 19.0) / 24.0) +
                                     0.5 * std::cos(2.0 * two_pi * (hour - 8.0) / 24.0));
                break;
        }
        base[t] = std::max(0.0, shape * (1.0 + spec.noise * z[t]));
    }

    const bool bounded = spec.kind != SynthKind::Demand;
    const double target = spec.mean_cf;
    auto fill = [&](double scale) {
        double sum = 0.0;
        for (std::size_t t = 0; t < spec.horizon; ++t) {
            double v = scale * base[t];
            if (bounded) v = std::min(v, 1.0);
            out.values[t] = v;
            sum += v;
        }
        return sum / static_cast<double>(spec.horizon);
    };
    double scale = target;
    for (int iter = 0; iter < 60; ++iter) {
        const double mean = fill(scale);
        if (mean <= 0.0 || std::abs(mean - target) <= 1e-12 * std::max(1.0, target)) break;
        scale *= target / mean;
    }
    return out;
}

const TimeSeries& TraceSet::at(const std::string& id) const {
    auto it = series_.find(id);
    if (it == series_.end()) throw TraceError("unknown trace '" + id + "'");
    return it->second;
}

TraceSet align(std::vector<std::pair<std::string, TimeSeries>> traces) {
    if (traces.empty()) throw TraceError("no traces");
    TraceSet set;
    const auto& ref_id = traces.front().first;
    const TimeSeries& ref = traces.front().second;
    set.start_ = ref.start;
    set.horizon_ = ref.size();
    for (auto& [id, ts] : traces) {
        if (ts.step != ref.step)
            throw TraceError("trace '" + id + "': step " + minutes_text(ts.step) + " differs from " +
                             minutes_text(ref.step) + " ('" + ref_id + "')");
        if (ts.start != ref.start)
            throw TraceError("trace '" + id + "': starts " + format_timestamp(ts.start) + ", expected " +
                             format_timestamp(ref.start) + " ('" + ref_id + "')");
        if (ts.size() != set.horizon_)
            throw TraceError("trace '" + id + "': length " + std::to_string(ts.size()) + " differs from " +
                             std::to_string(set.horizon_) + " ('" + ref_id + "')");
        if (set.series_.count(id)) throw TraceError("trace '" + id + "' defined twice");
        set.series_.emplace(id, std::move(ts));
    }
    return set;
}

ProfileSet read_profile_csv(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    const auto lines = detail::split_lines(text);
    const std::string where = path.string();
    if (lines.empty()) throw TraceError(where + ": empty file");
    const auto header = detail::split_row(lines[0]);
    if (header.size() < 2) throw TraceError(where + ": need an index column and at least one profile");
    ProfileSet out;
    std::vector<std::vector<double>> cols(header.size() - 1);
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (detail::trim(lines[row]).empty()) continue;
        const auto cells = detail::split_row(lines[row]);
        if (cells.size() != header.size())
            throw TraceError(where + ": row " + std::to_string(row + 1) + " has wrong cell count");
        for (std::size_t c = 1; c < cells.size(); ++c) {
            auto v = detail::parse_double(cells[c]);
            if (!v)
                throw TraceError(where + ": row " + std::to_string(row + 1) + ": non-numeric value '" +
                                 std::string(cells[c]) + "'");
            cols[c - 1].push_back(*v);
        }
    }
    for (std::size_t c = 1; c < header.size(); ++c) out[std::string(header[c])] = std::move(cols[c - 1]);
    return out;
}

std::size_t interval_count(year_month_day first, year_month_day last) {
    const auto d = (sys_days{last} + days{1}) - sys_days{first};
    if (d.count() <= 0) return 0;
    return static_cast<std::size_t>(d.count()) * kIntervalsPerDay;
}

int days_in_year(int y) { return year{y}.is_leap() ? 366 : 365; }

Calendar Calendar::build(Timestamp start, std::size_t horizon) {
    Calendar cal;
    cal.year_index.resize(horizon);
    cal.day_of_year.resize(horizon);
    cal.slot.resize(horizon);
    sys_days current_day{};
    int current_year = 0;
    std::uint16_t doy = 0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const Timestamp ts = start + kHalfHour * static_cast<long>(t);
        const auto dp = floor<days>(ts);
        if (t == 0 || dp != current_day) {
            current_day = dp;
            year_month_day ymd{dp};
            const int y = static_cast<int>(ymd.year());
            if (cal.years.empty() || y != current_year) {
                current_year = y;
                cal.years.push_back(y);
            }
            doy = static_cast<std::uint16_t>((dp - sys_days{ymd.year() / January / 1}).count());
        }
        cal.year_index[t] = static_cast<std::uint16_t>(cal.years.size() - 1);
        cal.day_of_year[t] = doy;
        cal.slot[t] = static_cast<std::uint8_t>((ts - dp) / kHalfHour);
    }
    return cal;
}

}  // namespace gridsim
