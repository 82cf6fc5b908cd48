#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gridsim/scenario.hpp"
#include "gridsim/traces.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("gridsim_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline gridsim::Timestamp jan1(int year) {
    using namespace std::chrono;
    return sys_days{std::chrono::year{year} / January / 1};
}

inline gridsim::TimeSeries series(std::vector<double> values, gridsim::Timestamp start = jan1(2021)) {
    return gridsim::TimeSeries{start, gridsim::kHalfHour, std::move(values)};
}

inline gridsim::TimeSeries constant(double v, std::size_t n, gridsim::Timestamp start = jan1(2021)) {
    return series(std::vector<double>(n, v), start);
}

// Regions "R0".."Rn-1", one zone "Z<i>" each, traces "pv<i>", "wind<i>", "load<i>".
// Links chain the regions in order, 1000 km apart.
inline gridsim::Scenario chain_scenario(std::size_t regions, bool interconnected = true) {
    gridsim::Scenario s;
    s.id = "test";
    s.flags.interconnection_enabled = interconnected;
    for (std::size_t i = 0; i < regions; ++i) {
        const auto n = std::to_string(i);
        gridsim::Region r;
        r.id = "R" + n;
        r.zones = {"Z" + n};
        s.regions.push_back(r);
        s.zones.push_back({"Z" + n, r.id, "pv" + n, "wind" + n, std::nullopt});
        s.demand.base_trace[r.id] = "load" + n;
        if (i > 0) {
            gridsim::Interconnector ic;
            ic.id = "L" + std::to_string(i);
            ic.from_region = "R" + std::to_string(i - 1);
            ic.to_region = r.id;
            ic.length_km = 1000.0;
            s.interconnectors.push_back(ic);
        }
    }
    return s;
}

// Constant traces for chain_scenario.
inline gridsim::TraceSet flat_traces(std::size_t regions, std::size_t n, double pv, double wind, double load,
                                     gridsim::Timestamp start = jan1(2021)) {
    std::vector<std::pair<std::string, gridsim::TimeSeries>> v;
    for (std::size_t i = 0; i < regions; ++i) {
        const auto k = std::to_string(i);
        v.emplace_back("pv" + k, constant(pv, n, start));
        v.emplace_back("wind" + k, constant(wind, n, start));
        v.emplace_back("load" + k, constant(load, n, start));
    }
    return gridsim::align(std::move(v));
}

}  // namespace testing
