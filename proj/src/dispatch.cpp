#include "gridsim/dispatch.hpp"

#include <algorithm>
#include <cmath>

namespace gridsim {

namespace {

constexpr double kEps = 1e-12;

}  // namespace

// ---------------------------------------------------------------------------
// Portfolio

Portfolio Portfolio::zeros(const Scenario& s) {
    Portfolio p;
    p.pv_gw.assign(s.zones.size(), 0.0);
    p.wind_gw.assign(s.zones.size(), 0.0);
    p.storage_power_gw.assign(s.regions.size(), 0.0);
    p.storage_energy_gwh.assign(s.regions.size(), 0.0);
    p.link_gw.assign(s.interconnectors.size(), 0.0);
    return p;
}

std::vector<double> to_vector(const Portfolio& p) {
    std::vector<double> x;
    for (const auto* v : {&p.pv_gw, &p.wind_gw, &p.storage_power_gw, &p.storage_energy_gwh, &p.link_gw})
        x.insert(x.end(), v->begin(), v->end());
    return x;
}

std::size_t decision_dimension(const Scenario& s) {
    return 2 * s.zones.size() + 2 * s.regions.size() + s.interconnectors.size();
}

Portfolio portfolio_from_vector(const Scenario& s, std::span<const double> x) {
    if (x.size() != decision_dimension(s))
        throw Error("decision vector has " + std::to_string(x.size()) + " entries, expected " +
                    std::to_string(decision_dimension(s)));
    Portfolio p = Portfolio::zeros(s);
    std::size_t i = 0;
    for (auto* v : {&p.pv_gw, &p.wind_gw, &p.storage_power_gw, &p.storage_energy_gwh, &p.link_gw})
        for (double& e : *v) e = x[i++];
    return p;
}

std::vector<Violation> validate_portfolio(const Scenario& s, const Portfolio& p) {
    std::vector<Violation> v;
    const Portfolio shape = Portfolio::zeros(s);
    if (p.pv_gw.size() != shape.pv_gw.size() || p.wind_gw.size() != shape.wind_gw.size() ||
        p.storage_power_gw.size() != shape.storage_power_gw.size() ||
        p.storage_energy_gwh.size() != shape.storage_energy_gwh.size() || p.link_gw.size() != shape.link_gw.size()) {
        v.push_back({"bad_shape", "portfolio does not match the scenario's zones, regions and interconnectors"});
        return v;
    }
    for (double x : to_vector(p))
        if (!(x >= 0.0) || !std::isfinite(x)) {
            v.push_back({"negative_cap", "portfolio capacities must be finite and >= 0"});
            break;
        }
    for (std::size_t r = 0; r < p.storage_power_gw.size(); ++r)
        if (p.storage_energy_gwh[r] + 1e-12 < p.storage_power_gw[r] * kIntervalHours)
            v.push_back({"storage_duration", "region '" + s.regions[r].id +
                                                 "': storage energy below one interval at full power"});
    return v;
}

// ---------------------------------------------------------------------------
// Storage

StorageState StorageState::with_round_trip(double power_gw, double energy_gwh, double round_trip,
                                           double soc_fraction) {
    const double eff = std::sqrt(round_trip);
    return {soc_fraction * energy_gwh, energy_gwh, power_gw, eff, eff};
}

double storage_charge_limit(const StorageState& s) {
    if (s.charge_eff <= 0.0) return 0.0;
    const double room = std::max(0.0, s.energy_cap_gwh - s.soc_gwh);
    return std::max(0.0, std::min(s.power_cap_gw, room / (s.charge_eff * kIntervalHours)));
}

double storage_discharge_limit(const StorageState& s) {
    const double avail = std::max(0.0, s.soc_gwh);
    return std::max(0.0, std::min(s.power_cap_gw, avail * s.discharge_eff / kIntervalHours));
}

StorageStep storage_update(const StorageState& s, double request_gw, StorageDirection dir) {
    StorageStep out{s, 0.0};
    const double request = std::max(0.0, request_gw);
    if (dir == StorageDirection::Charge) {
        const double limit = storage_charge_limit(s);
        out.accepted_gw = std::min(request, limit);
        if (out.accepted_gw >= limit && limit < s.power_cap_gw)
            out.state.soc_gwh = s.energy_cap_gwh;
        else
            out.state.soc_gwh = std::min(s.energy_cap_gwh, s.soc_gwh + out.accepted_gw * s.charge_eff * kIntervalHours);
    } else {
        const double limit = storage_discharge_limit(s);
        out.accepted_gw = std::min(request, limit);
        if (out.accepted_gw >= limit && limit < s.power_cap_gw)
            out.state.soc_gwh = 0.0;
        else if (s.discharge_eff > 0.0)
            out.state.soc_gwh = std::max(0.0, s.soc_gwh - out.accepted_gw * kIntervalHours / s.discharge_eff);
    }
    return out;
}

// ---------------------------------------------------------------------------
// EV aggregate

double ev_charge_headroom(const EVAggregateState& ev, double draw_gw) {
    if (ev.charge_eff <= 0.0) return 0.0;
    const double room = ev.capacity_gwh - ev.soc_gwh + draw_gw * kIntervalHours;
    return std::clamp(room / (ev.charge_eff * kIntervalHours), 0.0, ev.max_charge_gw);
}

double ev_forced_charge(const EVAggregateState& ev, std::span<const double> draws_gw) {
    if (draws_gw.empty() || ev.charge_eff <= 0.0 || ev.max_charge_gw <= 0.0) return 0.0;
    const double step = ev.charge_eff * kIntervalHours;  // GWh stored per GW of grid charge
    const double floor = ev.floor_gwh();
    double drawn = 0.0;
    double need = 0.0;
    for (std::size_t k = 0; k < draws_gw.size(); ++k) {
        drawn += draws_gw[k] * kIntervalHours;
        const double later = ev.max_charge_gw * step * static_cast<double>(k);
        need = std::max(need, (floor - ev.soc_gwh + drawn - later) / step);
        // Once full-rate charging would fill the fleet, what happens later
        // no longer depends on this interval's decision.
        if (ev.soc_gwh + ev.max_charge_gw * step * static_cast<double>(k + 1) - drawn >= ev.capacity_gwh) break;
    }
    return std::min(need, ev_charge_headroom(ev, draws_gw[0]));
}

double ev_flexible_charge(const EVAggregateState& ev, double surplus_gw, double /*deficit_gw*/,
                          std::span<const double> draws_gw) {
    const double forced = ev_forced_charge(ev, draws_gw);
    if (surplus_gw <= 0.0) return forced;
    const double headroom = ev_charge_headroom(ev, draws_gw.empty() ? 0.0 : draws_gw[0]);
    return std::max(forced, std::min(surplus_gw, headroom));
}

EVStepOutcome ev_apply(const EVAggregateState& ev, double charge_gw, double draw_gw) {
    EVStepOutcome out{ev, 0.0};
    double soc = ev.soc_gwh + (charge_gw * ev.charge_eff - draw_gw) * kIntervalHours;
    const double floor = ev.floor_gwh();
    if (soc < floor) {
        const double missing = floor - soc;  // battery-side GWh
        out.shortfall_gw = ev.charge_eff > 0.0 ? missing / kIntervalHours / ev.charge_eff : missing / kIntervalHours;
        soc = floor;
    }
    out.state.soc_gwh = std::min(soc, ev.capacity_gwh);
    return out;
}

// ---------------------------------------------------------------------------
// Hydro / bio

double HydroBioBudget::remaining_gwh() const noexcept {
    return std::max(0.0, (annual_cap_twh - year_to_date_twh) * 1000.0);
}

double hydro_bio_limit(const HydroBioBudget& b) {
    return std::max(0.0, std::min(b.power_cap_gw, b.remaining_gwh() / kIntervalHours));
}

double hydro_bio_dispatch(HydroBioBudget& b, double residual_deficit_gw) {
    const double remaining_gw = b.remaining_gwh() / kIntervalHours;
    const double d = std::max(0.0, std::min({residual_deficit_gw, b.power_cap_gw, remaining_gw}));
    if (d >= remaining_gw)
        b.year_to_date_twh = std::max(b.year_to_date_twh, b.annual_cap_twh);
    else
        b.year_to_date_twh += d * kIntervalHours / 1000.0;
    return d;
}

// ---------------------------------------------------------------------------
// Model

DispatchModel build_dispatch_model(const Scenario& s, const TraceSet& traces, const ProfileSet& profiles) {
    DispatchModel m;
    m.scenario = std::make_shared<const Scenario>(s);
    m.topology = build_topology(s);
    m.start = traces.start();
    m.horizon = traces.horizon();
    m.calendar = Calendar::build(m.start, m.horizon);

    auto demand = compose_demand(s.demand, s.region_ids(), traces, profiles);
    const std::size_t nr = s.regions.size();
    m.inflexible_gw.resize(nr);
    m.ev_gw = std::move(demand.flexible_gw);
    for (std::size_t r = 0; r < nr; ++r) {
        m.inflexible_gw[r] = std::move(demand.total_gw[r]);
        for (std::size_t t = 0; t < m.horizon; ++t) m.inflexible_gw[r][t] -= m.ev_gw[r][t];
    }
    m.ev_capacity_gwh = std::move(demand.ev_capacity_gwh);
    m.ev_max_charge_gw = std::move(demand.ev_max_charge_gw);
    m.ev_charge_eff = std::move(demand.ev_charge_efficiency);

    auto cf = [&](const std::string& id) {
        if (id.empty()) return std::vector<double>(m.horizon, 0.0);
        return traces.at(id).values;
    };
    for (const auto& z : s.zones) {
        m.pv_cf.push_back(cf(z.pv_trace));
        m.wind_cf.push_back(cf(z.wind_trace));
        const auto r = s.region_index(z.region);
        if (!r) throw Error("zone '" + z.id + "' references unknown region '" + z.region + "'");
        m.zone_region.push_back(*r);
    }
    return m;
}

DispatchModel restrict_to_region(const DispatchModel& m, std::size_t region) {
    const Scenario& full = *m.scenario;
    if (region >= full.regions.size()) throw Error("region index out of range");
    Scenario s = full;
    const std::string rid = full.regions[region].id;
    s.regions = {full.regions[region]};
    s.interconnectors.clear();
    s.zones.clear();
    DispatchModel out;
    for (std::size_t z = 0; z < full.zones.size(); ++z) {
        if (m.zone_region[z] != region) continue;
        s.zones.push_back(full.zones[z]);
        out.pv_cf.push_back(m.pv_cf[z]);
        out.wind_cf.push_back(m.wind_cf[z]);
        out.zone_region.push_back(0);
    }
    auto keep_region = [&](auto& map) {
        for (auto it = map.begin(); it != map.end();) it = it->first == rid ? std::next(it) : map.erase(it);
    };
    keep_region(s.demand.base_trace);
    keep_region(s.demand.transport_shares);
    keep_region(s.demand.heating_shares);
    keep_region(s.demand.industry_shares);
    s.id = full.id + "/" + rid;

    out.scenario = std::make_shared<const Scenario>(std::move(s));
    out.topology = build_topology(*out.scenario);
    out.calendar = m.calendar;
    out.start = m.start;
    out.horizon = m.horizon;
    out.inflexible_gw = {m.inflexible_gw[region]};
    out.ev_gw = {m.ev_gw[region]};
    out.ev_capacity_gwh = {m.ev_capacity_gwh[region]};
    out.ev_max_charge_gw = {m.ev_max_charge_gw[region]};
    out.ev_charge_eff = {m.ev_charge_eff[region]};
    return out;
}

DispatchModel with_costs(const DispatchModel& m, const TechnologyCosts& costs) {
    DispatchModel out = m;
    Scenario s = *m.scenario;
    s.costs = costs;
    out.scenario = std::make_shared<const Scenario>(std::move(s));
    return out;
}

// ---------------------------------------------------------------------------
// Interval balance

namespace {

struct Scratch {
    std::vector<double> pos, pass, offer, discharge_avail, charge_avail, hydro_avail;
    std::vector<double> discharge, charge, hydro, ev_load, ev_extra, ev_room;
    std::vector<char> no_sink, flexible;

    void resize(std::size_t n) {
        for (auto* v : {&pos, &pass, &offer, &discharge_avail, &charge_avail, &hydro_avail, &discharge, &charge,
                        &hydro, &ev_load, &ev_extra, &ev_room})
            v->assign(n, 0.0);
        no_sink.assign(n, 0);
        flexible.assign(n, 0);
    }
};

// Offers spare capacity from regions in `offer` to the deficits in `pos`
// and returns how much each offering region actually supplied.
void supply_pass(const Topology& topo, FlowWorkspace& ws, Scratch& sc, std::vector<double>& supplied) {
    const std::size_t n = sc.pos.size();
    bool any_offer = false, any_deficit = false;
    for (std::size_t r = 0; r < n; ++r) {
        any_offer |= sc.offer[r] > kEps;
        any_deficit |= sc.pos[r] < -kEps;
    }
    std::fill(supplied.begin(), supplied.end(), 0.0);
    if (!any_offer || !any_deficit) return;
    for (std::size_t r = 0; r < n; ++r) sc.pass[r] = sc.pos[r] < 0.0 ? sc.pos[r] : sc.offer[r];
    balance_flows_inplace(topo, sc.pass, ws);
    for (std::size_t r = 0; r < n; ++r) {
        if (sc.pos[r] < 0.0) {
            sc.pos[r] = sc.pass[r];
        } else if (sc.offer[r] > 0.0) {
            supplied[r] = sc.offer[r] - sc.pass[r];
            sc.offer[r] = sc.pass[r];
        }
    }
}

// Moves remaining surplus in `pos` into headroom at eligible remote regions
// and returns how much each region absorbed.
void absorb_pass(const Topology& topo, FlowWorkspace& ws, Scratch& sc, const std::vector<double>& room,
                 std::vector<double>& absorbed) {
    const std::size_t n = sc.pos.size();
    std::fill(absorbed.begin(), absorbed.end(), 0.0);
    bool any_surplus = false, any_room = false;
    for (std::size_t r = 0; r < n; ++r) {
        any_surplus |= sc.pos[r] > kEps;
        any_room |= sc.pos[r] == 0.0 && !sc.no_sink[r] && room[r] > kEps;
    }
    if (!any_surplus || !any_room) return;
    for (std::size_t r = 0; r < n; ++r) {
        if (sc.pos[r] > 0.0)
            sc.pass[r] = sc.pos[r];
        else if (sc.pos[r] == 0.0 && !sc.no_sink[r])
            sc.pass[r] = -room[r];
        else
            sc.pass[r] = 0.0;
    }
    balance_flows_inplace(topo, sc.pass, ws);
    for (std::size_t r = 0; r < n; ++r) {
        if (sc.pos[r] > 0.0)
            sc.pos[r] = sc.pass[r];
        else if (sc.pos[r] == 0.0 && !sc.no_sink[r] && room[r] > 0.0)
            absorbed[r] = room[r] + sc.pass[r];
    }
}

}  // namespace

void step_interval(const DispatchContext& ctx, SystemState& state, const IntervalInputs& in, IntervalResult& out,
                   FlowWorkspace& ws) {
    thread_local Scratch sc;
    thread_local std::vector<double> moved;
    const Topology& topo = *ctx.topology;
    const std::size_t n = in.demand_gw.size();
    sc.resize(n);
    moved.assign(n, 0.0);
    out.regions.assign(n, RegionInterval{});
    ws.reset(topo, ctx.edge_capacity);

    // EV load first: the forced part of a flexible fleet, otherwise the
    // profile-locked charging.
    for (std::size_t r = 0; r < n; ++r) {
        const auto& ev = state.ev[r];
        sc.flexible[r] = ctx.ev_flexible && ev.capacity_gwh > 0.0;
        if (sc.flexible[r]) {
            sc.ev_load[r] = ev_forced_charge(ev, in.ev_draw_window[r]);
            const double draw = in.ev_draw_window[r].empty() ? 0.0 : in.ev_draw_window[r][0];
            sc.ev_room[r] = std::max(0.0, ev_charge_headroom(ev, draw) - sc.ev_load[r]);
        } else {
            sc.ev_load[r] = in.ev_fixed_gw[r];
        }
        sc.pos[r] = in.vre_gw[r] - in.demand_gw[r] - sc.ev_load[r];
        sc.discharge_avail[r] = storage_discharge_limit(state.storage[r]);
        sc.charge_avail[r] = storage_charge_limit(state.storage[r]);
    }

    // Hydro/bio availability; a pooled budget is shared out in region order.
    double pool = state.shared_hydro.remaining_gwh() / kIntervalHours;
    for (std::size_t r = 0; r < n; ++r) {
        if (ctx.shared_hydro) {
            sc.hydro_avail[r] = std::min(state.hydro[r].power_cap_gw, pool);
            pool -= sc.hydro_avail[r];
        } else {
            sc.hydro_avail[r] = hydro_bio_limit(state.hydro[r]);
        }
    }

    // VRE surplus to deficits.
    balance_flows_inplace(topo, sc.pos, ws);

    // Local storage, then spare storage elsewhere.
    for (std::size_t r = 0; r < n; ++r) {
        if (sc.pos[r] >= 0.0) continue;
        const double d = std::min(-sc.pos[r], sc.discharge_avail[r]);
        sc.discharge[r] += d;
        sc.discharge_avail[r] -= d;
        sc.pos[r] = d >= -sc.pos[r] ? 0.0 : sc.pos[r] + d;
    }
    for (std::size_t r = 0; r < n; ++r) sc.offer[r] = sc.pos[r] >= 0.0 ? sc.discharge_avail[r] : 0.0;
    supply_pass(topo, ws, sc, moved);
    for (std::size_t r = 0; r < n; ++r) sc.discharge[r] += moved[r];

    // Local hydro/bio, then spare hydro/bio elsewhere.
    for (std::size_t r = 0; r < n; ++r) {
        if (sc.pos[r] >= 0.0) continue;
        const double h = std::min(-sc.pos[r], sc.hydro_avail[r]);
        sc.hydro[r] += h;
        sc.hydro_avail[r] -= h;
        sc.pos[r] = h >= -sc.pos[r] ? 0.0 : sc.pos[r] + h;
    }
    for (std::size_t r = 0; r < n; ++r) sc.offer[r] = sc.pos[r] >= 0.0 ? sc.hydro_avail[r] : 0.0;
    supply_pass(topo, ws, sc, moved);
    for (std::size_t r = 0; r < n; ++r) sc.hydro[r] += moved[r];

    // Regions that discharged or burned fuel, or still fall short, take no
    // charging energy from elsewhere.
    for (std::size_t r = 0; r < n; ++r)
        sc.no_sink[r] = sc.discharge[r] > 0.0 || sc.hydro[r] > 0.0 || sc.pos[r] < 0.0;

    // Surplus: local storage, remote storage, local EV, remote EV, spill.
    for (std::size_t r = 0; r < n; ++r) {
        if (sc.pos[r] <= 0.0 || sc.discharge[r] > 0.0) continue;
        const double c = std::min(sc.pos[r], sc.charge_avail[r]);
        sc.charge[r] += c;
        sc.charge_avail[r] -= c;
        sc.pos[r] = c >= sc.pos[r] ? 0.0 : sc.pos[r] - c;
    }
    absorb_pass(topo, ws, sc, sc.charge_avail, moved);
    for (std::size_t r = 0; r < n; ++r) {
        sc.charge[r] += moved[r];
        sc.charge_avail[r] -= moved[r];
    }
    for (std::size_t r = 0; r < n; ++r) {
        if (!sc.flexible[r] || sc.pos[r] <= 0.0) continue;
        const double e = std::min(sc.pos[r], sc.ev_room[r]);
        sc.ev_extra[r] += e;
        sc.ev_room[r] -= e;
        sc.pos[r] = e >= sc.pos[r] ? 0.0 : sc.pos[r] - e;
    }
    for (std::size_t r = 0; r < n; ++r)
        if (!sc.flexible[r]) sc.ev_room[r] = 0.0;
    absorb_pass(topo, ws, sc, sc.ev_room, moved);
    for (std::size_t r = 0; r < n; ++r) sc.ev_extra[r] += moved[r];

    // Commit state and fill the interval record.
    double pool_used = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        auto& o = out.regions[r];
        o.demand = in.demand_gw[r];
        o.vre_available = in.vre_gw[r];
        o.spill = std::max(0.0, sc.pos[r]);
        const double short_gw = std::max(0.0, -sc.pos[r]);
        o.vre_used = in.vre_gw[r] - o.spill;
        if (in.vre_gw[r] > 0.0) {
            o.pv_used = o.vre_used * in.pv_gw[r] / in.vre_gw[r];
            o.wind_used = o.vre_used - o.pv_used;
        }
        o.net_import = ws.received[r] - ws.sent[r];

        if (sc.discharge[r] > 0.0) {
            auto step = storage_update(state.storage[r], sc.discharge[r], StorageDirection::Discharge);
            state.storage[r] = step.state;
        } else if (sc.charge[r] > 0.0) {
            auto step = storage_update(state.storage[r], sc.charge[r], StorageDirection::Charge);
            state.storage[r] = step.state;
        }
        o.storage_discharge = sc.discharge[r];
        o.storage_charge = sc.charge[r];
        o.storage_soc = state.storage[r].soc_gwh;

        if (sc.hydro[r] > 0.0) {
            if (ctx.shared_hydro)
                pool_used += sc.hydro[r];
            else
                hydro_bio_dispatch(state.hydro[r], sc.hydro[r]);
        }
        o.hydro_bio = sc.hydro[r];

        // Shortfall falls on inflexible demand before the EV load.
        o.unserved = std::min(short_gw, in.demand_gw[r]);
        const double ev_unserved = short_gw - o.unserved;
        o.ev_charge = sc.ev_load[r] - ev_unserved + sc.ev_extra[r];
        o.ev_requirement = in.ev_fixed_gw[r];
        if (sc.flexible[r]) {
            const double draw = in.ev_draw_window[r].empty() ? 0.0 : in.ev_draw_window[r][0];
            auto ev = ev_apply(state.ev[r], o.ev_charge, draw);
            state.ev[r] = ev.state;
            o.ev_shortfall = ev.shortfall_gw;
            o.ev_soc = ev.state.soc_gwh;
        } else {
            o.ev_shortfall = ev_unserved;
        }
    }
    if (ctx.shared_hydro && pool_used > 0.0) {
        auto& b = state.shared_hydro;
        b.year_to_date_twh = std::min(b.annual_cap_twh, b.year_to_date_twh + pool_used * kIntervalHours / 1000.0);
    }

    for (auto& l : out.links) l = LinkInterval{};
    for (std::size_t e = 0; e < topo.edges.size(); ++e) {
        const auto link = topo.edges[e].link;
        if (link >= out.links.size()) out.links.resize(link + 1);
        out.links[link].flow_gw += ws.send_forward[e] - ws.send_reverse[e];
        out.links[link].send_gw += ws.send_forward[e] + ws.send_reverse[e];
        out.links[link].loss_gw += ws.loss[e];
    }
}

// ---------------------------------------------------------------------------
// Simulation

void RegionTotals::add(const RegionTotals& o) {
    demand_gwh += o.demand_gwh;
    vre_available_gwh += o.vre_available_gwh;
    vre_used_gwh += o.vre_used_gwh;
    pv_used_gwh += o.pv_used_gwh;
    wind_used_gwh += o.wind_used_gwh;
    storage_charge_gwh += o.storage_charge_gwh;
    storage_discharge_gwh += o.storage_discharge_gwh;
    hydro_bio_gwh += o.hydro_bio_gwh;
    ev_charge_gwh += o.ev_charge_gwh;
    import_gwh += o.import_gwh;
    export_gwh += o.export_gwh;
    spill_gwh += o.spill_gwh;
    unserved_gwh += o.unserved_gwh;
    peak_discharge_gw = std::max(peak_discharge_gw, o.peak_discharge_gw);
    min_ev_soc_fraction = std::min(min_ev_soc_fraction, o.min_ev_soc_fraction);
}

RegionTotals DispatchResult::system_totals() const {
    RegionTotals t;
    for (const auto& y : years)
        for (const auto& r : y.regions) t.add(r);
    return t;
}

std::vector<RegionTotals> DispatchResult::region_totals() const {
    std::vector<RegionTotals> out;
    for (const auto& y : years) {
        if (out.size() < y.regions.size()) out.resize(y.regions.size());
        for (std::size_t r = 0; r < y.regions.size(); ++r) out[r].add(y.regions[r]);
    }
    return out;
}

double DispatchResult::loss_gwh() const {
    double s = 0.0;
    for (const auto& y : years) s += y.loss_gwh;
    return s;
}

DispatchResult simulate(const DispatchModel& model, const Portfolio& portfolio, const SimulateOptions& opts) {
    const Scenario& s = *model.scenario;
    const std::size_t nr = model.region_count();
    const std::size_t nz = model.pv_cf.size();
    if (portfolio.pv_gw.size() != nz || portfolio.wind_gw.size() != nz || portfolio.storage_power_gw.size() != nr ||
        portfolio.storage_energy_gwh.size() != nr || portfolio.link_gw.size() != s.interconnectors.size())
        throw Error("portfolio shape does not match the scenario");
    if (model.calendar.size() != model.horizon) throw Error("horizon mismatch between calendar and traces");

    DispatchContext ctx;
    ctx.topology = &model.topology;
    ctx.ev_flexible = s.flags.ev_flexibility_enabled;
    ctx.shared_hydro = s.flags.hydro_bio_shared_budget;
    for (const auto& e : model.topology.edges)
        ctx.edge_capacity.push_back(s.interconnectors[e.link].existing_gw + portfolio.link_gw[e.link]);

    SystemState state;
    for (std::size_t r = 0; r < nr; ++r) {
        state.storage.push_back(StorageState::with_round_trip(portfolio.storage_power_gw[r],
                                                              portfolio.storage_energy_gwh[r],
                                                              s.dispatch.storage_round_trip,
                                                              s.dispatch.initial_soc_fraction));
        EVAggregateState ev;
        ev.capacity_gwh = model.ev_capacity_gwh[r];
        ev.max_charge_gw = model.ev_max_charge_gw[r];
        ev.charge_eff = model.ev_charge_eff[r];
        ev.min_soc_fraction = s.flags.ev_min_soc;
        ev.soc_gwh = s.dispatch.initial_soc_fraction * ev.capacity_gwh;
        state.ev.push_back(ev);
        const auto& reg = s.regions[r];
        HydroBioBudget b;
        if (reg.has_hydro_bio) {
            b.power_cap_gw = reg.hydro_bio_power_cap_gw;
            b.annual_cap_twh = reg.hydro_bio_annual_cap_twh;
        }
        state.hydro.push_back(b);
        state.shared_hydro.annual_cap_twh += b.annual_cap_twh;
        state.shared_hydro.power_cap_gw += b.power_cap_gw;
    }

    // Battery-side driving draw of the flexible fleet.
    std::vector<std::vector<double>> draws(nr);
    for (std::size_t r = 0; r < nr; ++r) {
        draws[r] = model.ev_gw[r];
        for (double& d : draws[r]) d *= model.ev_charge_eff[r];
    }
    const std::size_t lookahead =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s.dispatch.ev_lookahead_hours / kIntervalHours)));

    const int burn_in = opts.burn_in_years >= 0 ? opts.burn_in_years : s.dispatch.burn_in_years;
    DispatchResult dr;
    const auto& cal = model.calendar;
    if (burn_in > 0) {
        if (static_cast<std::size_t>(burn_in) >= cal.years.size())
            throw Error("burn-in of " + std::to_string(burn_in) + " years leaves no simulated year to count");
        dr.first_interval = static_cast<std::size_t>(
            std::find_if(cal.year_index.begin(), cal.year_index.end(),
                         [&](std::uint16_t y) { return y >= burn_in; }) -
            cal.year_index.begin());
    }

    IntervalInputs in;
    in.demand_gw.assign(nr, 0.0);
    in.vre_gw.assign(nr, 0.0);
    in.pv_gw.assign(nr, 0.0);
    in.ev_draw_window.assign(nr, {});
    in.ev_fixed_gw.assign(nr, 0.0);
    IntervalResult res;
    res.links.assign(s.interconnectors.size(), LinkInterval{});
    FlowWorkspace ws;
    if (opts.record_intervals) dr.intervals.reserve(model.horizon);

    YearTotals* year = nullptr;
    for (std::size_t t = 0; t < model.horizon; ++t) {
        const int y = cal.years[cal.year_index[t]];
        if (t == 0 || y != state.current_year) {
            state.current_year = y;
            for (auto& b : state.hydro) b.start_new_year();
            state.shared_hydro.start_new_year();
        }
        for (std::size_t r = 0; r < nr; ++r) {
            in.demand_gw[r] = model.inflexible_gw[r][t];
            in.vre_gw[r] = 0.0;
            in.pv_gw[r] = 0.0;
            in.ev_fixed_gw[r] = model.ev_gw[r][t];
            const std::size_t end = std::min(model.horizon, t + lookahead);
            in.ev_draw_window[r] = std::span<const double>(draws[r].data() + t, end - t);
        }
        for (std::size_t z = 0; z < nz; ++z) {
            const auto r = model.zone_region[z];
            const double pv = portfolio.pv_gw[z] * model.pv_cf[z][t];
            in.pv_gw[r] += pv;
            in.vre_gw[r] += pv + portfolio.wind_gw[z] * model.wind_cf[z][t];
        }
        step_interval(ctx, state, in, res, ws);
        if (opts.record_intervals) dr.intervals.push_back(res);
        if (t < dr.first_interval) continue;

        if (!year || year->year != y) {
            dr.years.push_back(YearTotals{y, 0, std::vector<RegionTotals>(nr), 0.0, 0.0});
            year = &dr.years.back();
        }
        ++year->intervals;
        ++dr.counted_intervals;
        double unserved_now = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            const auto& o = res.regions[r];
            auto& a = year->regions[r];
            constexpr double h = kIntervalHours;
            a.demand_gwh += (o.demand + o.ev_requirement) * h;
            a.vre_available_gwh += o.vre_available * h;
            a.vre_used_gwh += o.vre_used * h;
            a.pv_used_gwh += o.pv_used * h;
            a.wind_used_gwh += o.wind_used * h;
            a.storage_charge_gwh += o.storage_charge * h;
            a.storage_discharge_gwh += o.storage_discharge * h;
            a.hydro_bio_gwh += o.hydro_bio * h;
            a.ev_charge_gwh += o.ev_charge * h;
            a.import_gwh += std::max(0.0, o.net_import) * h;
            a.export_gwh += std::max(0.0, -o.net_import) * h;
            a.spill_gwh += o.spill * h;
            a.unserved_gwh += (o.unserved + o.ev_shortfall) * h;
            a.peak_discharge_gw = std::max(a.peak_discharge_gw, o.storage_discharge);
            if (ctx.ev_flexible && state.ev[r].capacity_gwh > 0.0)
                a.min_ev_soc_fraction = std::min(a.min_ev_soc_fraction, o.ev_soc / state.ev[r].capacity_gwh);
            unserved_now += o.unserved + o.ev_shortfall;
        }
        for (const auto& l : res.links) year->loss_gwh += l.loss_gw * kIntervalHours;
        year->worst_unserved_gw = std::max(year->worst_unserved_gw, unserved_now);
    }
    dr.counted_years = static_cast<double>(dr.counted_intervals) * kIntervalHours / kHoursPerYear;
    return dr;
}

DispatchResult simulate(const Scenario& s, const Portfolio& portfolio, const TraceSet& traces,
                        const ProfileSet& profiles, const SimulateOptions& opts) {
    return simulate(build_dispatch_model(s, traces, profiles), portfolio, opts);
}

ReliabilityReport reliability(const DispatchResult& dr) {
    ReliabilityReport rep;
    double unserved = 0.0, demand = 0.0;
    for (const auto& y : dr.years) {
        double yu = 0.0, yd = 0.0;
        for (const auto& r : y.regions) {
            yu += r.unserved_gwh;
            yd += r.demand_gwh;
        }
        rep.years.push_back(y.year);
        rep.year_fraction.push_back(yd > 0.0 ? yu / yd : 0.0);
        unserved += yu;
        demand += yd;
        rep.worst_interval_gw = std::max(rep.worst_interval_gw, y.worst_unserved_gw);
    }
    rep.overall_fraction = demand > 0.0 ? unserved / demand : 0.0;
    return rep;
}

}  // namespace gridsim
