#include "gridsim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "gridsim/network.hpp"

namespace gridsim {

namespace {

std::size_t line_of(const YAML::Node& n) {
    const auto m = n.Mark();
    return m.line >= 0 ? static_cast<std::size_t>(m.line) + 1 : 0;
}

/// Strict mapping reader: every key must be consumed, or `finish` throws.
class MapReader {
public:
    MapReader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.IsMap()) throw ParseError(path_, line_of(node_), "expected a mapping");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return static_cast<bool>(node_[key]);
    }

    YAML::Node child(const std::string& key) {
        seen_.insert(key);
        return node_[key];
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <typename T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        const YAML::Node n = node_[key];
        if (!n) return;
        out = convert<T>(n, key_path(key));
    }

    template <typename T>
    T require(const std::string& key) {
        seen_.insert(key);
        const YAML::Node n = node_[key];
        if (!n) throw ParseError(key_path(key), line_of(node_), "missing required key");
        return convert<T>(n, key_path(key));
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            const auto key = it->first.as<std::string>();
            if (!seen_.count(key)) throw ParseError(key_path(key), line_of(it->first), "unknown key");
        }
    }

    template <typename T>
    static T convert(const YAML::Node& n, const std::string& path) {
        if constexpr (std::is_same_v<T, std::string>) {
            if (!n.IsScalar()) throw ParseError(path, line_of(n), "expected a string");
            return n.as<std::string>();
        } else {
            if (!n.IsScalar()) throw ParseError(path, line_of(n), "expected a scalar");
            try {
                if constexpr (std::is_same_v<T, std::size_t>) {
                    const auto v = n.as<long long>();
                    if (v < 0) throw ParseError(path, line_of(n), "expected a non-negative integer");
                    return static_cast<std::size_t>(v);
                } else {
                    return n.as<T>();
                }
            } catch (const YAML::BadConversion&) {
                const char* what = std::is_same_v<T, bool> ? "expected true or false"
                                   : std::is_integral_v<T> ? "expected an integer"
                                                           : "expected a number";
                throw ParseError(path, line_of(n), what);
            }
        }
    }

private:
    YAML::Node node_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename F>
void for_each_item(const YAML::Node& seq, const std::string& path, F&& fn) {
    if (!seq) return;
    if (!seq.IsSequence()) throw ParseError(path, line_of(seq), "expected a list");
    for (std::size_t i = 0; i < seq.size(); ++i) fn(seq[i], path + "[" + std::to_string(i) + "]");
}

std::vector<std::string> string_list(const YAML::Node& seq, const std::string& path) {
    std::vector<std::string> out;
    for_each_item(seq, path, [&](const YAML::Node& n, const std::string& p) {
        out.push_back(MapReader::convert<std::string>(n, p));
    });
    return out;
}

VariableBounds parse_bounds(const YAML::Node& n, const std::string& path) {
    if (!n.IsSequence() || n.size() != 2) throw ParseError(path, line_of(n), "expected [lo, hi]");
    return {MapReader::convert<double>(n[0], path), MapReader::convert<double>(n[1], path)};
}

template <typename T>
std::map<std::string, T> parse_map(const YAML::Node& n, const std::string& path) {
    std::map<std::string, T> out;
    if (!n) return out;
    if (!n.IsMap()) throw ParseError(path, line_of(n), "expected a mapping");
    for (auto it = n.begin(); it != n.end(); ++it) {
        const auto key = it->first.as<std::string>();
        if constexpr (std::is_same_v<T, VariableBounds>)
            out[key] = parse_bounds(it->second, path + "." + key);
        else
            out[key] = MapReader::convert<T>(it->second, path + "." + key);
    }
    return out;
}

void parse_generator(MapReader& parent, const std::string& key, GeneratorCost& g) {
    if (!parent.has(key)) return;
    MapReader r(parent.child(key), parent.key_path(key));
    r.get("capital_per_kw", g.capital_per_kw);
    r.get("fom_per_kw_yr", g.fom_per_kw_yr);
    r.get("vom_per_mwh", g.vom_per_mwh);
    r.get("lifetime_years", g.lifetime_years);
    r.finish();
}

void parse_costs(MapReader& top, TechnologyCosts& c) {
    if (!top.has("costs")) return;
    MapReader r(top.child("costs"), "costs");
    r.get("discount_rate", c.discount_rate_real);
    r.get("hydro_bio_price_per_mwh", c.hydro_bio_price_per_mwh);
    parse_generator(r, "pv", c.pv);
    parse_generator(r, "wind", c.wind);
    if (r.has("storage")) {
        MapReader s(r.child("storage"), "costs.storage");
        s.get("power_per_kw", c.storage.power_per_kw);
        s.get("energy_per_kwh", c.storage.energy_per_kwh);
        s.get("fom_per_kw_yr", c.storage.fom_per_kw_yr);
        s.get("vom_per_mwh", c.storage.vom_per_mwh);
        s.get("lifetime_years", c.storage.lifetime_years);
        s.finish();
    }
    if (r.has("hvdc_overhead")) {
        MapReader s(r.child("hvdc_overhead"), "costs.hvdc_overhead");
        s.get("line_per_mw_km", c.hvdc_overhead.line_per_mw_km);
        s.get("converter_per_mw", c.hvdc_overhead.converter_per_mw);
        s.get("lifetime_years", c.hvdc_overhead.lifetime_years);
        s.finish();
    }
    if (r.has("hvdc_submarine")) {
        MapReader s(r.child("hvdc_submarine"), "costs.hvdc_submarine");
        s.get("capital_per_kw", c.hvdc_submarine.capital_per_kw);
        s.get("lifetime_years", c.hvdc_submarine.lifetime_years);
        s.finish();
    }
    if (r.has("hvac")) {
        MapReader s(r.child("hvac"), "costs.hvac");
        s.get("capital_per_kw", c.hvac.capital_per_kw);
        s.get("lifetime_years", c.hvac.lifetime_years);
        s.get("storage_multiplier", c.hvac.storage_multiplier);
        s.finish();
    }
    r.finish();
}

void parse_demand(MapReader& top, const ScenarioFlags& flags, DemandSpec& d) {
    if (!top.has("demand")) return;
    MapReader r(top.child("demand"), "demand");
    d.base_trace = parse_map<std::string>(r.child("base"), "demand.base");
    r.get("industry_gw", d.industry_gw);
    d.transport_shares = parse_map<double>(r.child("transport_shares"), "demand.transport_shares");
    d.heating_shares = parse_map<double>(r.child("heating_shares"), "demand.heating_shares");
    d.industry_shares = parse_map<double>(r.child("industry_shares"), "demand.industry_shares");
    for_each_item(r.child("fleets"), "demand.fleets", [&](const YAML::Node& n, const std::string& p) {
        MapReader f(n, p);
        FleetClass fc;
        fc.name = f.require<std::string>("name");
        f.get("count", fc.count);
        f.get("annual_km", fc.annual_km);
        f.get("kwh_per_100km", fc.kwh_per_100km);
        f.get("charging_efficiency", fc.charging_efficiency);
        f.get("vampire_loss_per_day", fc.vampire_loss_per_day);
        f.get("tnd_loss", fc.tnd_loss);
        f.get("battery_kwh", fc.battery_kwh);
        f.get("charger_kw", fc.charger_kw);
        f.get("fixed_annual_twh", fc.fixed_annual_twh);
        f.get("profile", fc.profile);
        const bool has_share = f.has("flexible_share");
        f.get("flexible_share", fc.flexible_share);
        if (f.has("flexible")) {
            if (has_share) throw ParseError(f.key_path("flexible"), line_of(n), "give either flexible or flexible_share");
            bool flexible = false;
            f.get("flexible", flexible);
            fc.flexible_share = flexible ? flags.ev_flexible_share : 0.0;
        }
        f.finish();
        d.fleets.push_back(std::move(fc));
    });
    for_each_item(r.child("heating"), "demand.heating", [&](const YAML::Node& n, const std::string& p) {
        MapReader h(n, p);
        HeatingSpec hs;
        hs.name = h.require<std::string>("name");
        h.get("fuel_energy_pj", hs.fuel_energy_pj);
        h.get("fuel_efficiency", hs.fuel_efficiency);
        h.get("cop", hs.cop);
        h.get("tnd_loss", hs.tnd_loss);
        h.get("profile", hs.profile);
        h.finish();
        d.heating.push_back(std::move(hs));
    });
    r.finish();
}

void parse_optimizer(MapReader& top, OptimizerSettings& o) {
    if (!top.has("optimizer")) return;
    MapReader r(top.child("optimizer"), "optimizer");
    if (r.has("bounds")) {
        MapReader b(r.child("bounds"), "optimizer.bounds");
        auto one = [&](const char* key, VariableBounds& out) {
            if (b.has(key)) out = parse_bounds(b.child(key), b.key_path(key));
        };
        one("pv_gw", o.pv_gw);
        one("wind_gw", o.wind_gw);
        one("storage_power_gw", o.storage_power_gw);
        one("storage_energy_gwh", o.storage_energy_gwh);
        one("link_gw", o.link_gw);
        b.finish();
    }
    o.item_bounds = parse_map<VariableBounds>(r.child("item_bounds"), "optimizer.item_bounds");
    r.get("population", o.population);
    r.get("generations", o.generations);
    r.get("differential_weight", o.differential_weight);
    r.get("crossover_rate", o.crossover_rate);
    r.get("penalty_weight", o.penalty_weight);
    r.get("convergence_window", o.convergence_window);
    r.get("convergence_tolerance", o.convergence_tolerance);
    r.finish();
}

void check_references(const Scenario& s) {
    std::vector<Violation> bad;
    std::set<std::string> regions;
    for (const auto& r : s.regions) regions.insert(r.id);
    auto need = [&](const std::string& id, const std::string& where) {
        if (!regions.count(id))
            bad.push_back({"unknown_region", where + " references undeclared region '" + id + "'"});
    };
    for (const auto& ic : s.interconnectors) {
        need(ic.from_region, "interconnector '" + ic.id + "'");
        need(ic.to_region, "interconnector '" + ic.id + "'");
    }
    for (const auto& [region, trace] : s.demand.base_trace) need(region, "demand.base");
    for (const auto& [region, v] : s.demand.transport_shares) need(region, "demand.transport_shares");
    for (const auto& [region, v] : s.demand.heating_shares) need(region, "demand.heating_shares");
    for (const auto& [region, v] : s.demand.industry_shares) need(region, "demand.industry_shares");
    if (!bad.empty()) throw ValidationError(std::move(bad));
}

std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string out(buf, ptr);
    if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
    return out;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::optional<std::size_t> Scenario::region_index(std::string_view rid) const {
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (regions[i].id == rid) return i;
    return std::nullopt;
}

std::optional<std::size_t> Scenario::zone_index(std::string_view zid) const {
    for (std::size_t i = 0; i < zones.size(); ++i)
        if (zones[i].id == zid) return i;
    return std::nullopt;
}

std::vector<std::string> Scenario::region_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : regions) ids.push_back(r.id);
    return ids;
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ParseError("<document>", static_cast<std::size_t>(e.mark.line) + 1, e.msg);
    }
    Scenario s;
    s.base_dir = base_dir;
    MapReader top(root, "");
    s.schema_version = top.require<int>("schema_version");
    if (s.schema_version != kScenarioSchemaVersion)
        throw ParseError("schema_version", line_of(root["schema_version"]),
                         "unsupported version " + std::to_string(s.schema_version));
    s.id = top.require<std::string>("id");
    top.get("reliability_limit", s.reliability_limit);
    s.trace_files = string_list(top.child("traces"), "traces");
    s.profile_files = string_list(top.child("profiles"), "profiles");
    top.get("resample_traces", s.resample_traces);

    if (top.has("flags")) {
        MapReader f(top.child("flags"), "flags");
        f.get("interconnection", s.flags.interconnection_enabled);
        f.get("ev_flexibility", s.flags.ev_flexibility_enabled);
        f.get("ev_flexible_share", s.flags.ev_flexible_share);
        f.get("ev_min_soc", s.flags.ev_min_soc);
        f.get("hydro_bio_shared_budget", s.flags.hydro_bio_shared_budget);
        f.finish();
    }
    if (top.has("dispatch")) {
        MapReader d(top.child("dispatch"), "dispatch");
        d.get("storage_round_trip", s.dispatch.storage_round_trip);
        d.get("initial_soc", s.dispatch.initial_soc_fraction);
        d.get("ev_lookahead_hours", s.dispatch.ev_lookahead_hours);
        d.get("burn_in_years", s.dispatch.burn_in_years);
        d.finish();
    }

    if (!top.has("regions")) throw ParseError("regions", line_of(root), "missing required key");
    for_each_item(top.child("regions"), "regions", [&](const YAML::Node& n, const std::string& p) {
        MapReader r(n, p);
        Region region;
        region.id = r.require<std::string>("id");
        r.get("hydro_bio_power_gw", region.hydro_bio_power_cap_gw);
        r.get("hydro_bio_annual_twh", region.hydro_bio_annual_cap_twh);
        region.has_hydro_bio = region.hydro_bio_power_cap_gw > 0.0 || region.hydro_bio_annual_cap_twh > 0.0;
        r.get("has_hydro_bio", region.has_hydro_bio);
        for_each_item(r.child("zones"), r.key_path("zones"), [&](const YAML::Node& zn, const std::string& zp) {
            MapReader z(zn, zp);
            Zone zone;
            zone.id = z.require<std::string>("id");
            zone.region = region.id;
            z.get("pv_trace", zone.pv_trace);
            z.get("wind_trace", zone.wind_trace);
            if (z.has("hvac_cost_per_kw")) {
                double v = 0.0;
                z.get("hvac_cost_per_kw", v);
                zone.hvac_connection_cost_per_kw = v;
            }
            z.finish();
            region.zones.push_back(zone.id);
            s.zones.push_back(std::move(zone));
        });
        r.finish();
        s.regions.push_back(std::move(region));
    });

    for_each_item(top.child("interconnectors"), "interconnectors", [&](const YAML::Node& n, const std::string& p) {
        MapReader r(n, p);
        Interconnector ic;
        ic.id = r.require<std::string>("id");
        ic.from_region = r.require<std::string>("from");
        ic.to_region = r.require<std::string>("to");
        ic.length_km = r.require<double>("length_km");
        std::string kind = "overhead";
        r.get("kind", kind);
        if (kind == "overhead")
            ic.kind = LinkKind::Overhead;
        else if (kind == "submarine")
            ic.kind = LinkKind::Submarine;
        else
            throw ParseError(r.key_path("kind"), line_of(n["kind"]), "expected overhead or submarine");
        r.get("reserve_fraction", ic.reserve_fraction);
        r.get("existing_gw", ic.existing_gw);
        r.finish();
        s.interconnectors.push_back(std::move(ic));
    });

    parse_costs(top, s.costs);
    parse_demand(top, s.flags, s.demand);
    parse_optimizer(top, s.optimizer);
    top.finish();
    check_references(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    return parse_scenario(text, path.parent_path());
}

std::string render_scenario(const Scenario& s) {
    std::ostringstream o;
    auto num = [](double v) { return fmt_double(v); };
    auto boolean = [](bool b) { return b ? "true" : "false"; };
    auto bounds = [&](VariableBounds b) { return "[" + num(b.lo) + ", " + num(b.hi) + "]"; };
    auto list = [&](const char* key, const std::vector<std::string>& items) {
        o << key << ":";
        if (items.empty()) {
            o << " []\n";
            return;
        }
        o << "\n";
        for (const auto& i : items) o << "  - " << quote(i) << "\n";
    };
    auto dmap = [&](const char* key, const std::map<std::string, double>& m) {
        if (m.empty()) return;
        o << "  " << key << ":\n";
        for (const auto& [k, v] : m) o << "    " << quote(k) << ": " << num(v) << "\n";
    };

    o << "schema_version: " << s.schema_version << "\n";
    o << "id: " << quote(s.id) << "\n";
    o << "reliability_limit: " << num(s.reliability_limit) << "\n";
    list("traces", s.trace_files);
    list("profiles", s.profile_files);
    o << "resample_traces: " << boolean(s.resample_traces) << "\n";

    o << "flags:\n"
      << "  interconnection: " << boolean(s.flags.interconnection_enabled) << "\n"
      << "  ev_flexibility: " << boolean(s.flags.ev_flexibility_enabled) << "\n"
      << "  ev_flexible_share: " << num(s.flags.ev_flexible_share) << "\n"
      << "  ev_min_soc: " << num(s.flags.ev_min_soc) << "\n"
      << "  hydro_bio_shared_budget: " << boolean(s.flags.hydro_bio_shared_budget) << "\n";
    o << "dispatch:\n"
      << "  storage_round_trip: " << num(s.dispatch.storage_round_trip) << "\n"
      << "  initial_soc: " << num(s.dispatch.initial_soc_fraction) << "\n"
      << "  ev_lookahead_hours: " << num(s.dispatch.ev_lookahead_hours) << "\n"
      << "  burn_in_years: " << s.dispatch.burn_in_years << "\n";

    o << "regions:";
    if (s.regions.empty()) o << " []";
    o << "\n";
    for (const auto& r : s.regions) {
        o << "  - id: " << quote(r.id) << "\n"
          << "    has_hydro_bio: " << boolean(r.has_hydro_bio) << "\n"
          << "    hydro_bio_power_gw: " << num(r.hydro_bio_power_cap_gw) << "\n"
          << "    hydro_bio_annual_twh: " << num(r.hydro_bio_annual_cap_twh) << "\n"
          << "    zones:";
        bool any = false;
        for (const auto& z : s.zones) {
            if (z.region != r.id) continue;
            if (!any) o << "\n";
            any = true;
            o << "      - id: " << quote(z.id) << "\n"
              << "        pv_trace: " << quote(z.pv_trace) << "\n"
              << "        wind_trace: " << quote(z.wind_trace) << "\n";
            if (z.hvac_connection_cost_per_kw)
                o << "        hvac_cost_per_kw: " << num(*z.hvac_connection_cost_per_kw) << "\n";
        }
        if (!any) o << " []\n";
    }

    o << "interconnectors:";
    if (s.interconnectors.empty()) o << " []";
    o << "\n";
    for (const auto& ic : s.interconnectors) {
        o << "  - id: " << quote(ic.id) << "\n"
          << "    from: " << quote(ic.from_region) << "\n"
          << "    to: " << quote(ic.to_region) << "\n"
          << "    length_km: " << num(ic.length_km) << "\n"
          << "    kind: " << (ic.kind == LinkKind::Overhead ? "overhead" : "submarine") << "\n"
          << "    reserve_fraction: " << num(ic.reserve_fraction) << "\n"
          << "    existing_gw: " << num(ic.existing_gw) << "\n";
    }

    const auto& c = s.costs;
    auto gen = [&](const char* key, const GeneratorCost& g) {
        o << "  " << key << ":\n"
          << "    capital_per_kw: " << num(g.capital_per_kw) << "\n"
          << "    fom_per_kw_yr: " << num(g.fom_per_kw_yr) << "\n"
          << "    vom_per_mwh: " << num(g.vom_per_mwh) << "\n"
          << "    lifetime_years: " << num(g.lifetime_years) << "\n";
    };
    o << "costs:\n"
      << "  discount_rate: " << num(c.discount_rate_real) << "\n"
      << "  hydro_bio_price_per_mwh: " << num(c.hydro_bio_price_per_mwh) << "\n";
    gen("pv", c.pv);
    gen("wind", c.wind);
    o << "  storage:\n"
      << "    power_per_kw: " << num(c.storage.power_per_kw) << "\n"
      << "    energy_per_kwh: " << num(c.storage.energy_per_kwh) << "\n"
      << "    fom_per_kw_yr: " << num(c.storage.fom_per_kw_yr) << "\n"
      << "    vom_per_mwh: " << num(c.storage.vom_per_mwh) << "\n"
      << "    lifetime_years: " << num(c.storage.lifetime_years) << "\n";
    o << "  hvdc_overhead:\n"
      << "    line_per_mw_km: " << num(c.hvdc_overhead.line_per_mw_km) << "\n"
      << "    converter_per_mw: " << num(c.hvdc_overhead.converter_per_mw) << "\n"
      << "    lifetime_years: " << num(c.hvdc_overhead.lifetime_years) << "\n";
    o << "  hvdc_submarine:\n"
      << "    capital_per_kw: " << num(c.hvdc_submarine.capital_per_kw) << "\n"
      << "    lifetime_years: " << num(c.hvdc_submarine.lifetime_years) << "\n";
    o << "  hvac:\n"
      << "    capital_per_kw: " << num(c.hvac.capital_per_kw) << "\n"
      << "    lifetime_years: " << num(c.hvac.lifetime_years) << "\n"
      << "    storage_multiplier: " << num(c.hvac.storage_multiplier) << "\n";

    const auto& d = s.demand;
    o << "demand:\n";
    if (!d.base_trace.empty()) {
        o << "  base:\n";
        for (const auto& [k, v] : d.base_trace) o << "    " << quote(k) << ": " << quote(v) << "\n";
    }
    o << "  industry_gw: " << num(d.industry_gw) << "\n";
    dmap("transport_shares", d.transport_shares);
    dmap("heating_shares", d.heating_shares);
    dmap("industry_shares", d.industry_shares);
    if (!d.fleets.empty()) o << "  fleets:\n";
    for (const auto& f : d.fleets) {
        o << "    - name: " << quote(f.name) << "\n"
          << "      count: " << num(f.count) << "\n"
          << "      annual_km: " << num(f.annual_km) << "\n"
          << "      kwh_per_100km: " << num(f.kwh_per_100km) << "\n"
          << "      charging_efficiency: " << num(f.charging_efficiency) << "\n"
          << "      vampire_loss_per_day: " << num(f.vampire_loss_per_day) << "\n"
          << "      tnd_loss: " << num(f.tnd_loss) << "\n"
          << "      flexible_share: " << num(f.flexible_share) << "\n"
          << "      battery_kwh: " << num(f.battery_kwh) << "\n"
          << "      charger_kw: " << num(f.charger_kw) << "\n"
          << "      fixed_annual_twh: " << num(f.fixed_annual_twh) << "\n"
          << "      profile: " << quote(f.profile) << "\n";
    }
    if (!d.heating.empty()) o << "  heating:\n";
    for (const auto& h : d.heating) {
        o << "    - name: " << quote(h.name) << "\n"
          << "      fuel_energy_pj: " << num(h.fuel_energy_pj) << "\n"
          << "      fuel_efficiency: " << num(h.fuel_efficiency) << "\n"
          << "      cop: " << num(h.cop) << "\n"
          << "      tnd_loss: " << num(h.tnd_loss) << "\n"
          << "      profile: " << quote(h.profile) << "\n";
    }

    const auto& op = s.optimizer;
    o << "optimizer:\n"
      << "  bounds:\n"
      << "    pv_gw: " << bounds(op.pv_gw) << "\n"
      << "    wind_gw: " << bounds(op.wind_gw) << "\n"
      << "    storage_power_gw: " << bounds(op.storage_power_gw) << "\n"
      << "    storage_energy_gwh: " << bounds(op.storage_energy_gwh) << "\n"
      << "    link_gw: " << bounds(op.link_gw) << "\n";
    if (!op.item_bounds.empty()) {
        o << "  item_bounds:\n";
        for (const auto& [k, b] : op.item_bounds) o << "    " << quote(k) << ": " << bounds(b) << "\n";
    }
    o << "  population: " << op.population << "\n"
      << "  generations: " << op.generations << "\n"
      << "  differential_weight: " << num(op.differential_weight) << "\n"
      << "  crossover_rate: " << num(op.crossover_rate) << "\n"
      << "  penalty_weight: " << num(op.penalty_weight) << "\n"
      << "  convergence_window: " << op.convergence_window << "\n"
      << "  convergence_tolerance: " << num(op.convergence_tolerance) << "\n";
    return o.str();
}

std::vector<Violation> validate_scenario(const Scenario& s) {
    std::vector<Violation> v;
    auto add = [&](const char* code, std::string msg) { v.push_back({code, std::move(msg)}); };
    auto fraction = [&](double x, const char* code, const std::string& what) {
        if (!(x >= 0.0 && x <= 1.0)) add(code, what + " = " + fmt_double(x) + " outside [0, 1]");
    };
    auto nonneg = [&](double x, const char* code, const std::string& what) {
        if (!(x >= 0.0)) add(code, what + " = " + fmt_double(x) + " is negative");
    };
    auto lifetime = [&](double x, const std::string& what) {
        if (!(x >= 1.0)) add("bad_lifetime", what + " lifetime " + fmt_double(x) + " < 1 year");
    };

    if (s.schema_version != kScenarioSchemaVersion) add("schema_version", "unsupported schema_version");
    if (s.id.empty()) add("empty_id", "scenario id is empty");
    if (s.regions.empty()) add("no_regions", "scenario declares no regions");
    if (!(s.reliability_limit >= 0.0 && s.reliability_limit <= 1.0))
        add("bad_reliability_limit", "reliability_limit outside [0, 1]");

    std::set<std::string> region_ids;
    for (const auto& r : s.regions) {
        if (!region_ids.insert(r.id).second) add("duplicate_id", "region '" + r.id + "' declared twice");
        if (r.zones.empty()) add("empty_zones", "region '" + r.id + "' has no zones");
        nonneg(r.hydro_bio_power_cap_gw, "negative_cap", "region '" + r.id + "' hydro_bio_power_gw");
        nonneg(r.hydro_bio_annual_cap_twh, "negative_cap", "region '" + r.id + "' hydro_bio_annual_twh");
    }
    std::set<std::string> zone_ids;
    for (const auto& z : s.zones) {
        if (!zone_ids.insert(z.id).second) add("duplicate_id", "zone '" + z.id + "' declared twice");
        if (!region_ids.count(z.region)) add("unknown_region", "zone '" + z.id + "' references '" + z.region + "'");
        if (z.pv_trace.empty() && z.wind_trace.empty())
            add("missing_trace", "zone '" + z.id + "' has neither pv_trace nor wind_trace");
        if (z.hvac_connection_cost_per_kw) nonneg(*z.hvac_connection_cost_per_kw, "negative_cost", "zone '" + z.id + "' hvac_cost_per_kw");
    }
    std::set<std::string> link_ids;
    for (const auto& ic : s.interconnectors) {
        const std::string name = "interconnector '" + ic.id + "'";
        if (!link_ids.insert(ic.id).second) add("duplicate_id", name + " declared twice");
        if (!(ic.length_km > 0.0)) add("bad_length", name + " length_km must be > 0");
        if (ic.from_region == ic.to_region) add("self_loop", name + " connects a region to itself");
        fraction(ic.reserve_fraction, "reserve_out_of_range", name + " reserve_fraction");
        nonneg(ic.existing_gw, "negative_cap", name + " existing_gw");
        for (const auto* end : {&ic.from_region, &ic.to_region})
            if (!region_ids.count(*end)) add("unknown_region", name + " references '" + *end + "'");
    }

    const auto& c = s.costs;
    auto gen = [&](const GeneratorCost& g, const std::string& name) {
        nonneg(g.capital_per_kw, "negative_cost", name + " capital_per_kw");
        nonneg(g.fom_per_kw_yr, "negative_cost", name + " fom_per_kw_yr");
        nonneg(g.vom_per_mwh, "negative_cost", name + " vom_per_mwh");
        lifetime(g.lifetime_years, name);
    };
    gen(c.pv, "pv");
    gen(c.wind, "wind");
    nonneg(c.storage.power_per_kw, "negative_cost", "storage power_per_kw");
    nonneg(c.storage.energy_per_kwh, "negative_cost", "storage energy_per_kwh");
    nonneg(c.storage.fom_per_kw_yr, "negative_cost", "storage fom_per_kw_yr");
    nonneg(c.storage.vom_per_mwh, "negative_cost", "storage vom_per_mwh");
    lifetime(c.storage.lifetime_years, "storage");
    nonneg(c.hvdc_overhead.line_per_mw_km, "negative_cost", "hvdc_overhead line_per_mw_km");
    nonneg(c.hvdc_overhead.converter_per_mw, "negative_cost", "hvdc_overhead converter_per_mw");
    lifetime(c.hvdc_overhead.lifetime_years, "hvdc_overhead");
    nonneg(c.hvdc_submarine.capital_per_kw, "negative_cost", "hvdc_submarine capital_per_kw");
    lifetime(c.hvdc_submarine.lifetime_years, "hvdc_submarine");
    nonneg(c.hvac.capital_per_kw, "negative_cost", "hvac capital_per_kw");
    nonneg(c.hvac.storage_multiplier, "negative_cost", "hvac storage_multiplier");
    lifetime(c.hvac.lifetime_years, "hvac");
    nonneg(c.discount_rate_real, "negative_cost", "discount_rate");
    nonneg(c.hydro_bio_price_per_mwh, "negative_cost", "hydro_bio_price_per_mwh");

    fraction(s.flags.ev_min_soc, "soc_out_of_range", "ev_min_soc");
    fraction(s.flags.ev_flexible_share, "share_out_of_range", "ev_flexible_share");
    if (!(s.dispatch.storage_round_trip > 0.0 && s.dispatch.storage_round_trip <= 1.0))
        add("bad_efficiency", "storage_round_trip must be in (0, 1]");
    fraction(s.dispatch.initial_soc_fraction, "soc_out_of_range", "initial_soc");
    if (!(s.dispatch.ev_lookahead_hours >= kIntervalHours)) add("bad_lookahead", "ev_lookahead_hours must be >= 0.5");
    if (s.dispatch.burn_in_years < 0) add("negative_value", "burn_in_years is negative");

    const auto& d = s.demand;
    for (const auto& [region, trace] : d.base_trace)
        if (!region_ids.count(region)) add("unknown_region", "demand.base references '" + region + "'");
    nonneg(d.industry_gw, "negative_value", "industry_gw");
    auto shares = [&](const std::map<std::string, double>& m, const char* what) {
        if (m.empty()) return;
        double sum = 0.0;
        for (const auto& [region, x] : m) {
            if (!region_ids.count(region)) add("unknown_region", std::string(what) + " references '" + region + "'");
            fraction(x, "share_out_of_range", std::string(what) + "." + region);
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-6) add("shares_sum", std::string(what) + " sum to " + fmt_double(sum) + ", expected 1");
    };
    shares(d.transport_shares, "transport_shares");
    shares(d.heating_shares, "heating_shares");
    shares(d.industry_shares, "industry_shares");
    for (const auto& f : d.fleets) {
        const std::string name = "fleet '" + f.name + "'";
        nonneg(f.count, "negative_value", name + " count");
        nonneg(f.annual_km, "negative_value", name + " annual_km");
        nonneg(f.kwh_per_100km, "negative_value", name + " kwh_per_100km");
        nonneg(f.battery_kwh, "negative_value", name + " battery_kwh");
        nonneg(f.charger_kw, "negative_value", name + " charger_kw");
        nonneg(f.fixed_annual_twh, "negative_value", name + " fixed_annual_twh");
        if (!(f.charging_efficiency > 0.0 && f.charging_efficiency <= 1.0))
            add("bad_efficiency", name + " charging_efficiency must be in (0, 1]");
        fraction(f.vampire_loss_per_day, "fraction_out_of_range", name + " vampire_loss_per_day");
        fraction(f.tnd_loss, "fraction_out_of_range", name + " tnd_loss");
        fraction(f.flexible_share, "share_out_of_range", name + " flexible_share");
    }
    for (const auto& h : d.heating) {
        const std::string name = "heating '" + h.name + "'";
        if (!(h.cop > 0.0)) add("bad_cop", name + " cop must be > 0");
        fraction(h.fuel_efficiency, "fraction_out_of_range", name + " fuel_efficiency");
        fraction(h.tnd_loss, "fraction_out_of_range", name + " tnd_loss");
        nonneg(h.fuel_energy_pj, "negative_value", name + " fuel_energy_pj");
    }

    const auto& op = s.optimizer;
    auto check_bounds = [&](VariableBounds b, const std::string& what) {
        if (!(b.lo >= 0.0 && b.lo <= b.hi && std::isfinite(b.hi))) add("bad_bounds", what + " bounds invalid");
    };
    check_bounds(op.pv_gw, "pv_gw");
    check_bounds(op.wind_gw, "wind_gw");
    check_bounds(op.storage_power_gw, "storage_power_gw");
    check_bounds(op.storage_energy_gwh, "storage_energy_gwh");
    check_bounds(op.link_gw, "link_gw");
    for (const auto& [k, b] : op.item_bounds) check_bounds(b, k);
    if (op.population != 0 && op.population < 4) add("bad_population", "population must be 0 or >= 4");
    if (!(op.differential_weight > 0.0 && op.differential_weight <= 2.0))
        add("bad_de_parameter", "differential_weight must be in (0, 2]");
    if (!(op.crossover_rate >= 0.0 && op.crossover_rate <= 1.0)) add("bad_de_parameter", "crossover_rate must be in [0, 1]");
    nonneg(op.penalty_weight, "negative_value", "penalty_weight");

    const bool refs_ok = std::none_of(v.begin(), v.end(), [](const Violation& x) {
        return x.code == "unknown_region" || x.code == "self_loop";
    });
    if (refs_ok && s.flags.interconnection_enabled && s.regions.size() > 1 && !build_topology(s).connected())
        add("disconnected", "interconnection is enabled but the region graph is not connected");
    return v;
}

std::vector<Violation> scenario_warnings(const Scenario& s) {
    std::vector<Violation> w;
    for (const auto& ic : s.interconnectors)
        if (kLossPerThousandKm * ic.length_km / 1000.0 > kMaxLossRate)
            w.push_back({"loss_capped", "interconnector '" + ic.id + "' loss rate capped at 0.5"});
    return w;
}

bool Topology::connected() const {
    if (nodes.size() <= 1) return true;
    std::vector<char> seen(nodes.size(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        const auto n = stack.back();
        stack.pop_back();
        for (auto e : incident[n]) {
            const auto other = edges[e].from == n ? edges[e].to : edges[e].from;
            if (!seen[other]) {
                seen[other] = 1;
                stack.push_back(other);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

Topology build_topology(const Scenario& s) {
    Topology t;
    t.nodes = s.region_ids();
    t.incident.resize(t.nodes.size());
    if (!s.flags.interconnection_enabled) return t;
    for (std::size_t i = 0; i < s.interconnectors.size(); ++i) {
        const auto& ic = s.interconnectors[i];
        auto a = s.region_index(ic.from_region);
        auto b = s.region_index(ic.to_region);
        if (!a || !b || *a == *b) continue;
        t.edges.push_back({i, *a, *b, line_loss_rate(ic.length_km)});
    }
    for (std::size_t e = 0; e < t.edges.size(); ++e) {
        t.incident[t.edges[e].from].push_back(e);
        t.incident[t.edges[e].to].push_back(e);
    }
    for (auto& inc : t.incident)
        std::sort(inc.begin(), inc.end(), [&](std::size_t x, std::size_t y) {
            return s.interconnectors[t.edges[x].link].id < s.interconnectors[t.edges[y].link].id;
        });
    return t;
}

ScenarioData load_scenario_data(const Scenario& s) {
    ScenarioData data;
    std::set<std::string> cf_ids;
    for (const auto& z : s.zones) {
        if (!z.pv_trace.empty()) cf_ids.insert(z.pv_trace);
        if (!z.wind_trace.empty()) cf_ids.insert(z.wind_trace);
    }
    std::vector<std::pair<std::string, TimeSeries>> all;
    for (const auto& file : s.trace_files) {
        const auto path = s.base_dir / file;
        auto table = read_trace_table(path);
        for (auto& [id, ts] : table) {
            if (ts.step != kHalfHour) {
                if (!s.resample_traces)
                    throw TraceError(path.string() + ": trace '" + id + "': step is " +
                                     std::to_string(ts.step.count()) + " min, expected 30 (resample first)");
                ts = resample_half_hourly(ts);
            }
            if (cf_ids.count(id)) data.clamped_cells += clamp_capacity_factor(ts, id);
            all.emplace_back(id, std::move(ts));
        }
    }
    data.traces = align(std::move(all));
    for (const auto& z : s.zones)
        for (const auto* id : {&z.pv_trace, &z.wind_trace})
            if (!id->empty() && !data.traces.contains(*id))
                throw TraceError("zone '" + z.id + "': trace '" + *id + "' not found in trace files");
    for (const auto& file : s.profile_files) {
        auto profiles = read_profile_csv(s.base_dir / file);
        for (auto& [id, w] : profiles) data.profiles[id] = std::move(w);
    }
    return data;
}

}  // namespace gridsim
