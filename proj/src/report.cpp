#include "gridsim/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "json.hpp"

namespace gridsim {

using ojson = nlohmann::ordered_json;

double round_sig6(double x) {
    if (x == 0.0 || !std::isfinite(x)) return x == 0.0 ? 0.0 : x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::strtod(buf, nullptr);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string input_content_hash(const Scenario& s, std::string_view scenario_text) {
    std::string all(scenario_text);
    for (const auto* files : {&s.trace_files, &s.profile_files})
        for (const auto& f : *files) {
            all += '\0';
            all += f;
            all += '\0';
            all += detail::read_file(s.base_dir / f);
        }
    return fnv1a_hex(all);
}

namespace {

NamedValues named(const std::vector<std::string>& ids, const std::vector<double>& v) {
    NamedValues out{ids, {}};
    for (double x : v) out.values.push_back(round_sig6(x));
    return out;
}

std::vector<std::string> zone_ids(const Scenario& s) {
    std::vector<std::string> ids;
    for (const auto& z : s.zones) ids.push_back(z.id);
    return ids;
}

std::vector<std::string> link_ids(const Scenario& s) {
    std::vector<std::string> ids;
    for (const auto& l : s.interconnectors) ids.push_back(l.id);
    return ids;
}

ojson named_json(const NamedValues& nv) {
    ojson o = ojson::object();
    for (std::size_t i = 0; i < nv.ids.size(); ++i) o[nv.ids[i]] = nv.values[i];
    return o;
}

NamedValues named_from(const ojson& o) {
    NamedValues nv;
    for (auto it = o.begin(); it != o.end(); ++it) {
        nv.ids.push_back(it.key());
        nv.values.push_back(it.value().get<double>());
    }
    return nv;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

RunSummary make_summary(const Scenario& s, const Evaluation& ev, std::string command, std::uint64_t seed,
                        std::string input_hash) {
    RunSummary rs;
    rs.scenario_id = s.id;
    rs.command = std::move(command);
    rs.seed = seed;
    rs.input_hash = std::move(input_hash);

    const auto& p = ev.portfolio;
    rs.pv_gw = named(zone_ids(s), p.pv_gw);
    rs.wind_gw = named(zone_ids(s), p.wind_gw);
    rs.storage_power_gw = named(s.region_ids(), p.storage_power_gw);
    rs.storage_energy_gwh = named(s.region_ids(), p.storage_energy_gwh);
    rs.link_gw = named(link_ids(s), p.link_gw);

    const auto& c = ev.costs;
    rs.lcoe = round_sig6(ev.fitness.lcoe);
    rs.lcog = round_sig6(c.lcog);
    rs.lcob_storage = round_sig6(c.lcob_storage);
    rs.lcob_transmission = round_sig6(c.lcob_transmission);
    rs.lcob_spill_loss = round_sig6(c.lcob_spill_loss);
    rs.identity_residual = round_sig6(c.lcoe - (c.lcog + c.lcob_storage + c.lcob_transmission + c.lcob_spill_loss));

    rs.annual_pv_musd = round_sig6(c.annual.pv / 1e6);
    rs.annual_wind_musd = round_sig6(c.annual.wind / 1e6);
    rs.annual_storage_musd = round_sig6(c.annual.storage / 1e6);
    rs.annual_hvdc_musd = round_sig6(c.annual.hvdc / 1e6);
    rs.annual_hvac_musd = round_sig6(c.annual.hvac / 1e6);
    rs.annual_vom_musd = round_sig6(c.vom_annual / 1e6);
    rs.annual_hydro_bio_musd = round_sig6(c.hydro_bio_annual / 1e6);

    double power = 0.0, energy = 0.0;
    for (double x : p.storage_power_gw) power += x;
    for (double x : p.storage_energy_gwh) energy += x;
    rs.storage_power_total_gw = round_sig6(power);
    rs.storage_energy_total_gwh = round_sig6(energy);

    rs.unserved_fraction = round_sig6(ev.reliability.overall_fraction);
    rs.worst_interval_unserved_gw = round_sig6(ev.reliability.worst_interval_gw);
    rs.years = ev.reliability.years;
    for (double f : ev.reliability.year_fraction) rs.year_unserved_fraction.push_back(round_sig6(f));
    rs.reliability_limit = round_sig6(s.reliability_limit);

    const auto& e = ev.energy;
    // Mix of what was actually dispatched.
    const double dispatched = e.pv_mwh + e.wind_mwh + e.hydro_bio_mwh;
    if (dispatched > 0.0) {
        rs.share_pv = round_sig6(e.pv_mwh / dispatched);
        rs.share_wind = round_sig6(e.wind_mwh / dispatched);
        rs.share_hydro_bio = round_sig6(e.hydro_bio_mwh / dispatched);
    }
    const auto& dr = ev.dispatch;
    if (dr.counted_years > 0.0) {
        const auto t = dr.system_totals();
        const double k = 1.0 / 1000.0 / dr.counted_years;
        rs.demand_twh_per_year = round_sig6(t.demand_gwh * k);
        rs.delivered_twh_per_year = round_sig6((t.demand_gwh - t.unserved_gwh) * k);
        rs.spill_twh_per_year = round_sig6(t.spill_gwh * k);
        rs.loss_twh_per_year = round_sig6(dr.loss_gwh() * k);
    }
    rs.penalty = round_sig6(ev.fitness.penalty);
    rs.fitness_total = round_sig6(ev.fitness.total);
    return rs;
}

std::string summary_to_json(const RunSummary& rs) {
    ojson j;
    j["format"] = "gridsim-summary";
    j["version"] = 1;
    j["scenario_id"] = rs.scenario_id;
    j["command"] = rs.command;
    j["seed"] = rs.seed;
    j["input_hash"] = rs.input_hash;
    j["portfolio"] = {{"pv_gw", named_json(rs.pv_gw)},
                      {"wind_gw", named_json(rs.wind_gw)},
                      {"storage_power_gw", named_json(rs.storage_power_gw)},
                      {"storage_energy_gwh", named_json(rs.storage_energy_gwh)},
                      {"link_gw", named_json(rs.link_gw)}};
    j["costs"] = {{"lcoe", rs.lcoe},
                  {"lcog", rs.lcog},
                  {"lcob_storage", rs.lcob_storage},
                  {"lcob_transmission", rs.lcob_transmission},
                  {"lcob_spill_loss", rs.lcob_spill_loss},
                  {"identity_residual", rs.identity_residual}};
    j["annual_costs_musd"] = {{"pv", rs.annual_pv_musd},           {"wind", rs.annual_wind_musd},
                              {"storage", rs.annual_storage_musd}, {"hvdc", rs.annual_hvdc_musd},
                              {"hvac", rs.annual_hvac_musd},       {"vom", rs.annual_vom_musd},
                              {"hydro_bio", rs.annual_hydro_bio_musd}};
    j["storage"] = {{"power_gw", rs.storage_power_total_gw}, {"energy_gwh", rs.storage_energy_total_gwh}};
    ojson years = ojson::array();
    for (std::size_t i = 0; i < rs.years.size(); ++i)
        years.push_back({{"year", rs.years[i]}, {"unserved_fraction", rs.year_unserved_fraction[i]}});
    j["reliability"] = {{"unserved_fraction", rs.unserved_fraction},
                        {"worst_interval_unserved_gw", rs.worst_interval_unserved_gw},
                        {"limit", rs.reliability_limit},
                        {"years", years}};
    j["generation_share"] = {{"pv", rs.share_pv}, {"wind", rs.share_wind}, {"hydro_bio", rs.share_hydro_bio}};
    j["energy_twh_per_year"] = {{"demand", rs.demand_twh_per_year},
                                {"delivered", rs.delivered_twh_per_year},
                                {"spill", rs.spill_twh_per_year},
                                {"loss", rs.loss_twh_per_year}};
    j["fitness"] = {{"penalty", rs.penalty}, {"total", rs.fitness_total}};
    j["optimizer"] = {{"generations", rs.generations},
                      {"evaluations", rs.evaluations},
                      {"stop_reason", rs.stop_reason},
                      {"history", rs.history}};
    return j.dump(2) + "\n";
}

RunSummary summary_from_json(std::string_view text) {
    RunSummary rs;
    try {
        const ojson j = ojson::parse(text);
        if (j.at("format") != "gridsim-summary") throw Error("not a gridsim summary");
        rs.scenario_id = j.at("scenario_id").get<std::string>();
        rs.command = j.at("command").get<std::string>();
        rs.seed = j.at("seed").get<std::uint64_t>();
        rs.input_hash = j.at("input_hash").get<std::string>();
        const auto& p = j.at("portfolio");
        rs.pv_gw = named_from(p.at("pv_gw"));
        rs.wind_gw = named_from(p.at("wind_gw"));
        rs.storage_power_gw = named_from(p.at("storage_power_gw"));
        rs.storage_energy_gwh = named_from(p.at("storage_energy_gwh"));
        rs.link_gw = named_from(p.at("link_gw"));
        const auto& c = j.at("costs");
        rs.lcoe = c.at("lcoe");
        rs.lcog = c.at("lcog");
        rs.lcob_storage = c.at("lcob_storage");
        rs.lcob_transmission = c.at("lcob_transmission");
        rs.lcob_spill_loss = c.at("lcob_spill_loss");
        rs.identity_residual = c.at("identity_residual");
        const auto& a = j.at("annual_costs_musd");
        rs.annual_pv_musd = a.at("pv");
        rs.annual_wind_musd = a.at("wind");
        rs.annual_storage_musd = a.at("storage");
        rs.annual_hvdc_musd = a.at("hvdc");
        rs.annual_hvac_musd = a.at("hvac");
        rs.annual_vom_musd = a.at("vom");
        rs.annual_hydro_bio_musd = a.at("hydro_bio");
        rs.storage_power_total_gw = j.at("storage").at("power_gw");
        rs.storage_energy_total_gwh = j.at("storage").at("energy_gwh");
        const auto& r = j.at("reliability");
        rs.unserved_fraction = r.at("unserved_fraction");
        rs.worst_interval_unserved_gw = r.at("worst_interval_unserved_gw");
        rs.reliability_limit = r.at("limit");
        for (const auto& y : r.at("years")) {
            rs.years.push_back(y.at("year").get<int>());
            rs.year_unserved_fraction.push_back(y.at("unserved_fraction").get<double>());
        }
        const auto& g = j.at("generation_share");
        rs.share_pv = g.at("pv");
        rs.share_wind = g.at("wind");
        rs.share_hydro_bio = g.at("hydro_bio");
        const auto& e = j.at("energy_twh_per_year");
        rs.demand_twh_per_year = e.at("demand");
        rs.delivered_twh_per_year = e.at("delivered");
        rs.spill_twh_per_year = e.at("spill");
        rs.loss_twh_per_year = e.at("loss");
        rs.penalty = j.at("fitness").at("penalty");
        rs.fitness_total = j.at("fitness").at("total");
        const auto& o = j.at("optimizer");
        rs.generations = o.at("generations");
        rs.evaluations = o.at("evaluations");
        rs.stop_reason = o.at("stop_reason").get<std::string>();
        rs.history = o.at("history").get<std::vector<double>>();
    } catch (const ojson::exception& e) {
        throw Error(std::string("malformed summary: ") + e.what());
    }
    return rs;
}

void write_summary(const RunSummary& rs, const std::filesystem::path& path) { write_text(path, summary_to_json(rs)); }

RunSummary read_summary(const std::filesystem::path& path) { return summary_from_json(detail::read_file(path)); }

std::string portfolio_to_json(const Scenario& s, const Portfolio& p) {
    ojson j;
    auto put = [&](const char* key, const std::vector<std::string>& ids, const std::vector<double>& v) {
        ojson o = ojson::object();
        for (std::size_t i = 0; i < ids.size(); ++i) o[ids[i]] = v[i];
        j[key] = o;
    };
    put("pv_gw", zone_ids(s), p.pv_gw);
    put("wind_gw", zone_ids(s), p.wind_gw);
    put("storage_power_gw", s.region_ids(), p.storage_power_gw);
    put("storage_energy_gwh", s.region_ids(), p.storage_energy_gwh);
    put("link_gw", link_ids(s), p.link_gw);
    return j.dump(2) + "\n";
}

Portfolio read_portfolio(const Scenario& s, const std::filesystem::path& path) {
    ojson j;
    try {
        j = ojson::parse(detail::read_file(path));
    } catch (const ojson::exception& e) {
        throw Error("portfolio '" + path.string() + "': " + e.what());
    }
    if (j.contains("portfolio")) j = j["portfolio"];
    if (!j.is_object()) throw Error("portfolio '" + path.string() + "': expected a JSON object");
    Portfolio p = Portfolio::zeros(s);
    auto take = [&](const char* key, const std::vector<std::string>& ids, std::vector<double>& out) {
        if (!j.contains(key)) return;
        const auto& o = j[key];
        if (!o.is_object()) throw Error("portfolio '" + path.string() + "': '" + key + "' must be an object");
        for (auto it = o.begin(); it != o.end(); ++it) {
            auto pos = std::find(ids.begin(), ids.end(), it.key());
            if (pos == ids.end())
                throw Error("portfolio '" + path.string() + "': unknown id '" + it.key() + "' in " + key);
            if (!it.value().is_number())
                throw Error("portfolio '" + path.string() + "': " + key + "." + it.key() + " is not a number");
            out[static_cast<std::size_t>(pos - ids.begin())] = it.value().get<double>();
        }
    };
    static const std::set<std::string> known{"pv_gw", "wind_gw", "storage_power_gw", "storage_energy_gwh", "link_gw"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw Error("portfolio '" + path.string() + "': unknown key '" + it.key() + "'");
    take("pv_gw", zone_ids(s), p.pv_gw);
    take("wind_gw", zone_ids(s), p.wind_gw);
    take("storage_power_gw", s.region_ids(), p.storage_power_gw);
    take("storage_energy_gwh", s.region_ids(), p.storage_energy_gwh);
    take("link_gw", link_ids(s), p.link_gw);
    auto v = validate_portfolio(s, p);
    if (!v.empty()) throw ValidationError(std::move(v));
    return p;
}

namespace {

const char* const kLedgerFields[] = {"demand",      "vre_used",  "storage_charge", "storage_discharge",
                                     "hydro_bio",   "ev_charge", "net_import",     "spill",
                                     "unserved",    "ev_shortfall", "storage_soc", "ev_soc"};

}  // namespace

void write_dispatch_csv(const DispatchModel& model, const DispatchResult& dr, IntervalWindow window,
                        const std::filesystem::path& path) {
    if (dr.intervals.size() != model.horizon) throw Error("dispatch CSV needs a run with recorded intervals");
    if (window.count == 0) window.count = model.horizon - std::min(window.first, model.horizon);
    if (window.first >= model.horizon || window.first + window.count > model.horizon)
        throw Error("window [" + std::to_string(window.first) + ", " + std::to_string(window.first + window.count) +
                    ") is outside the horizon of " + std::to_string(model.horizon) + " intervals");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    const auto regions = model.scenario->region_ids();
    out << "timestamp";
    for (const auto& r : regions)
        for (const char* f : kLedgerFields) out << ',' << r << ':' << f;
    out << '\n';
    char buf[32];
    for (std::size_t t = window.first; t < window.first + window.count; ++t) {
        out << format_timestamp(model.start + kHalfHour * static_cast<long>(t));
        for (const auto& o : dr.intervals[t].regions) {
            for (double v : {o.demand, o.vre_used, o.storage_charge, o.storage_discharge, o.hydro_bio, o.ev_charge,
                             o.net_import, o.spill, o.unserved, o.ev_shortfall, o.storage_soc, o.ev_soc}) {
                std::snprintf(buf, sizeof buf, "%.12g", v);
                out << ',' << buf;
            }
        }
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

BalanceCheck verify_dispatch_csv(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw Error("'" + path.string() + "' is empty");
    const auto header = detail::split_row(lines[0]);
    const std::size_t nf = std::size(kLedgerFields);
    if (header.size() < 1 + nf || (header.size() - 1) % nf != 0)
        throw Error("'" + path.string() + "' does not look like a dispatch CSV");
    const std::size_t nr = (header.size() - 1) / nf;
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t f = 0; f < nf; ++f) {
            const auto h = header[1 + r * nf + f];
            const auto colon = h.rfind(':');
            if (colon == std::string_view::npos || h.substr(colon + 1) != kLedgerFields[f])
                throw Error("unexpected column '" + std::string(h) + "'");
        }
    BalanceCheck check;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (detail::trim(lines[i]).empty()) continue;
        const auto cells = detail::split_row(lines[i]);
        if (cells.size() != header.size()) throw Error("row " + std::to_string(i + 1) + " has the wrong cell count");
        for (std::size_t r = 0; r < nr; ++r) {
            double v[12];
            for (std::size_t f = 0; f < nf; ++f) {
                auto x = detail::parse_double(cells[1 + r * nf + f]);
                if (!x) throw Error("row " + std::to_string(i + 1) + ": non-numeric cell");
                v[f] = *x;
            }
            // vre_used + discharge + hydro_bio + import - charge - ev = demand - unserved
            const double lhs = v[1] + v[3] + v[4] + v[6] - v[2] - v[5];
            const double rhs = v[0] - v[8];
            check.max_residual_gw = std::max(check.max_residual_gw, std::abs(lhs - rhs));
        }
        ++check.rows;
    }
    return check;
}

std::string format_summary(const RunSummary& rs) {
    std::ostringstream o;
    char buf[160];
    auto line = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        o << buf << '\n';
    };
    o << "scenario " << rs.scenario_id << " (" << rs.command << ", seed " << rs.seed << ", inputs " << rs.input_hash
      << ")\n";
    line("LCOE            %10.3f $/MWh", rs.lcoe);
    line("  LCOG          %10.3f", rs.lcog);
    line("  storage       %10.3f", rs.lcob_storage);
    line("  transmission  %10.3f", rs.lcob_transmission);
    line("  spill & loss  %10.3f", rs.lcob_spill_loss);
    line("storage         %10.3f GW  %10.3f GWh", rs.storage_power_total_gw, rs.storage_energy_total_gwh);
    line("unserved        %10.3g of demand (limit %g)", rs.unserved_fraction, rs.reliability_limit);
    line("generation mix  pv %.1f%%  wind %.1f%%  hydro/bio %.1f%%", 100 * rs.share_pv, 100 * rs.share_wind,
         100 * rs.share_hydro_bio);
    line("energy TWh/yr   demand %.4g  delivered %.4g  spill %.4g  loss %.4g", rs.demand_twh_per_year,
         rs.delivered_twh_per_year, rs.spill_twh_per_year, rs.loss_twh_per_year);
    auto group = [&](const char* name, const NamedValues& nv) {
        if (nv.ids.empty()) return;
        o << name;
        for (std::size_t i = 0; i < nv.ids.size(); ++i) o << "  " << nv.ids[i] << '=' << nv.values[i];
        o << '\n';
    };
    group("pv GW         ", rs.pv_gw);
    group("wind GW       ", rs.wind_gw);
    group("storage GW    ", rs.storage_power_gw);
    group("storage GWh   ", rs.storage_energy_gwh);
    group("links GW      ", rs.link_gw);
    if (rs.generations > 0)
        o << "optimizer      " << rs.generations << " generations, " << rs.evaluations << " evaluations, stop: "
          << rs.stop_reason << '\n';
    return o.str();
}

}  // namespace gridsim
