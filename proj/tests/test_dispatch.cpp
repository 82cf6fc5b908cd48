#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "gridsim/dispatch.hpp"
#include "gridsim/error.hpp"
#include "support.hpp"

using namespace gridsim;
using doctest::Approx;

namespace {

// One region, no links; the state is set up by each test.
struct SingleRegion {
    Topology topo;
    DispatchContext ctx;
    SystemState state;
    IntervalInputs in;
    IntervalResult out;
    FlowWorkspace ws;

    SingleRegion() {
        topo = build_topology(testing::chain_scenario(1));
        ctx.topology = &topo;
        state.storage.assign(1, StorageState{});
        state.ev.assign(1, EVAggregateState{});
        state.hydro.assign(1, HydroBioBudget{});
        in.demand_gw = {0.0};
        in.vre_gw = {0.0};
        in.pv_gw = {0.0};
        in.ev_draw_window.assign(1, {});
        in.ev_fixed_gw = {0.0};
    }

    const RegionInterval& step(double demand, double vre) {
        in.demand_gw[0] = demand;
        in.vre_gw[0] = vre;
        step_interval(ctx, state, in, out, ws);
        return out.regions[0];
    }
};

double balance_residual(const RegionInterval& o) {
    return o.vre_used + o.storage_discharge + o.hydro_bio + o.net_import - o.storage_charge - o.ev_charge -
           (o.demand - o.unserved);
}

Portfolio wind_only(const Scenario& s, double wind_gw) {
    auto p = Portfolio::zeros(s);
    std::fill(p.wind_gw.begin(), p.wind_gw.end(), wind_gw);
    return p;
}

}  // namespace

TEST_CASE("storage round trip returns 80% of grid energy") {
    auto s = StorageState::with_round_trip(20.0, 100.0, 0.8, 0.0);
    // 10 GWh of grid energy in one interval.
    auto c = storage_update(s, 20.0, StorageDirection::Charge);
    CHECK(c.accepted_gw == 20.0);
    s = c.state;
    double delivered = 0.0;
    for (int i = 0; i < 100 && s.soc_gwh > 0.0; ++i) {
        auto d = storage_update(s, 20.0, StorageDirection::Discharge);
        delivered += d.accepted_gw * kIntervalHours;
        s = d.state;
    }
    CHECK(s.soc_gwh == 0.0);
    CHECK(delivered == Approx(8.0).epsilon(1e-12));
}

TEST_CASE("storage limits") {
    auto empty = StorageState::with_round_trip(2.0, 10.0, 0.8, 0.0);
    CHECK(storage_update(empty, 1.0, StorageDirection::Discharge).accepted_gw == 0.0);
    CHECK(storage_update(empty, 5.0, StorageDirection::Charge).accepted_gw == 2.0);

    // Energy-limited charge fills exactly to capacity.
    auto nearly = StorageState::with_round_trip(10.0, 10.0, 0.8, 0.95);
    auto step = storage_update(nearly, 10.0, StorageDirection::Charge);
    CHECK(step.accepted_gw == Approx(0.5 / (std::sqrt(0.8) * 0.5)));
    CHECK(step.state.soc_gwh == 10.0);
    CHECK(storage_update(nearly, -1.0, StorageDirection::Charge).accepted_gw == 0.0);
}

TEST_CASE("merit order: deficit met from storage") {
    SingleRegion g;
    g.state.storage[0] = StorageState::with_round_trip(2.0, 100.0, 0.8, 0.5);
    const auto& o = g.step(1.0, 0.0);
    CHECK(o.storage_discharge == Approx(1.0));
    CHECK(o.unserved == 0.0);
    CHECK(balance_residual(o) == Approx(0.0));
}

TEST_CASE("merit order: nothing left to dispatch") {
    SingleRegion g;
    g.state.storage[0] = StorageState::with_round_trip(2.0, 100.0, 0.8, 0.0);
    g.state.hydro[0] = HydroBioBudget{5.0, 1.0, 1.0};
    const auto& o = g.step(1.0, 0.0);
    CHECK(o.hydro_bio == 0.0);
    CHECK(o.unserved == Approx(1.0));
}

TEST_CASE("merit order: surplus charges storage then spills") {
    SingleRegion g;
    auto s = StorageState::with_round_trip(1.0, 10.0, 0.8, 0.0);
    s.soc_gwh = 9.0;  // 1 GWh of headroom
    g.state.storage[0] = s;
    const auto& o = g.step(1.0, 4.0);
    CHECK(o.storage_charge == Approx(1.0));
    CHECK(o.spill == Approx(2.0));
    CHECK(o.vre_used == Approx(2.0));
    CHECK(balance_residual(o) == Approx(0.0));
}

TEST_CASE("merit order: hydro/bio after storage") {
    SingleRegion g;
    g.state.storage[0] = StorageState::with_round_trip(0.4, 100.0, 0.8, 0.5);
    g.state.hydro[0] = HydroBioBudget{2.0, 10.0, 0.0};
    const auto& o = g.step(1.0, 0.0);
    CHECK(o.storage_discharge == Approx(0.4));
    CHECK(o.hydro_bio == Approx(0.6));
    CHECK(o.unserved == 0.0);
    CHECK(g.state.hydro[0].year_to_date_twh == Approx(0.3e-3));
}

TEST_CASE("hydro/bio budget") {
    HydroBioBudget b{7.0, 0.0005, 0.0};  // 0.5 GWh left
    CHECK(hydro_bio_dispatch(b, 3.0) == Approx(1.0));
    CHECK(b.remaining_gwh() == 0.0);
    CHECK(hydro_bio_dispatch(b, 3.0) == 0.0);
    b.start_new_year();
    CHECK(b.year_to_date_twh == 0.0);
    CHECK(hydro_bio_limit(b) == Approx(1.0));
    HydroBioBudget big{7.0, 10.0, 0.0};
    CHECK(hydro_bio_dispatch(big, 3.0) == 3.0);
    CHECK(hydro_bio_dispatch(big, 30.0) == 7.0);
}

TEST_CASE("ev opportunistic charge follows the surplus") {
    EVAggregateState ev{50.0, 100.0, 1.5, 0.25, 0.85};
    const std::vector<double> draws(8, 0.0);
    CHECK(ev_flexible_charge(ev, 2.0, 0.0, draws) == Approx(1.5));
    ev.max_charge_gw = 5.0;
    CHECK(ev_flexible_charge(ev, 2.0, 0.0, draws) == Approx(2.0));
    CHECK(ev_flexible_charge(ev, 0.0, 1.0, draws) == 0.0);
}

TEST_CASE("ev forced charge over a four-interval window") {
    // Floor 25 GWh, SoC 26 GWh, 0.4 GWh stored per GW of charge. A 16 GW draw
    // in the last interval needs 2.5 GW now if the fleet charges at the full
    // 5 GW afterwards: 26 + 1 + 2 + 2 + 2 - 8 = 25.
    EVAggregateState ev{26.0, 100.0, 5.0, 0.25, 0.8};
    const std::vector<double> draws{0.0, 0.0, 0.0, 16.0};
    const double forced = ev_forced_charge(ev, draws);
    CHECK(forced == Approx(2.5).epsilon(1e-12));
    CHECK(ev_flexible_charge(ev, 0.0, 1.0, draws) == Approx(2.5));

    auto roll = [&](double first) {
        EVAggregateState s = ev;
        double shortfall = 0.0;
        for (std::size_t k = 0; k < draws.size(); ++k) {
            const auto r = ev_apply(s, k == 0 ? first : s.max_charge_gw, draws[k]);
            s = r.state;
            shortfall += r.shortfall_gw;
        }
        return std::pair{s.soc_gwh, shortfall};
    };
    auto [soc, shortfall] = roll(forced);
    CHECK(soc == Approx(25.0).epsilon(1e-12));
    CHECK(shortfall == Approx(0.0).epsilon(1e-12));
    // Any less and the floor is breached at the end of the window.
    CHECK(roll(forced - 0.1).second > 0.0);
}

TEST_CASE("ev_apply keeps the floor and the capacity") {
    EVAggregateState ev{25.0, 100.0, 5.0, 0.25, 0.8};
    auto r = ev_apply(ev, 0.0, 2.0);
    CHECK(r.state.soc_gwh == 25.0);
    CHECK(r.shortfall_gw == Approx(2.0 / 0.8));
    ev.soc_gwh = 99.9;
    r = ev_apply(ev, 5.0, 0.0);
    CHECK(r.state.soc_gwh == 100.0);
    CHECK(ev_charge_headroom(ev, 0.0) == Approx(0.1 / 0.4));
}

TEST_CASE("flat wind oversupply spills the excess") {
    const auto s = testing::chain_scenario(1);
    const auto traces = testing::flat_traces(1, 48, 0.0, 1.0, 1.0);
    const auto dr = simulate(s, wind_only(s, 2.0), traces, {}, {true});
    REQUIRE(dr.intervals.size() == 48);
    for (const auto& iv : dr.intervals) {
        CHECK(iv.regions[0].unserved == 0.0);
        CHECK(iv.regions[0].spill == Approx(1.0));
    }
    CHECK(reliability(dr).overall_fraction == 0.0);
}

TEST_CASE("zero portfolio leaves all demand unserved") {
    const auto s = testing::chain_scenario(2);
    const auto traces = testing::flat_traces(2, 96, 0.5, 0.5, 1.5);
    const auto dr = simulate(s, Portfolio::zeros(s), traces, {}, {true});
    for (const auto& iv : dr.intervals)
        for (const auto& r : iv.regions) CHECK(r.unserved == Approx(r.demand));
    CHECK(reliability(dr).overall_fraction == Approx(1.0));
    const auto tot = dr.system_totals();
    CHECK(tot.demand_gwh == Approx(2 * 1.5 * 96 * 0.5));
}

TEST_CASE("interconnection helps anti-correlated regions") {
    const std::size_t n = 48 * 14;
    const auto f = synth_factor(4, n, 0.99);
    std::vector<std::pair<std::string, TimeSeries>> v;
    for (int i = 0; i < 2; ++i) {
        const auto k = std::to_string(i);
        SynthSpec w{SynthKind::Wind, 10u + static_cast<unsigned>(i), testing::jan1(2021), n, 0.4, 0.1, 0.8};
        w.common_factor = f;
        w.common_loading = i == 0 ? 0.9 : -0.9;
        v.emplace_back("wind" + k, synth_trace(w));
        v.emplace_back("pv" + k, testing::constant(0.0, n));
        v.emplace_back("load" + k, testing::constant(1.0, n));
    }
    const auto traces = align(std::move(v));
    auto s = testing::chain_scenario(2);
    auto p = wind_only(s, 2.5);
    p.storage_power_gw = {0.5, 0.5};
    p.storage_energy_gwh = {2.0, 2.0};
    p.link_gw = {2.0};
    const double on = reliability(simulate(s, p, traces)).overall_fraction;
    s.flags.interconnection_enabled = false;
    const double off = reliability(simulate(s, p, traces)).overall_fraction;
    CHECK(off > 0.0);
    CHECK(on <= off);
}

TEST_CASE("hydro/bio budget resets at the calendar year") {
    // Two days straddling new year, demand 1 GW, no VRE, 1 GW of hydro/bio
    // with 6 GWh per year: 12 intervals before and after the boundary.
    auto s = testing::chain_scenario(1);
    s.regions[0].has_hydro_bio = true;
    s.regions[0].hydro_bio_power_cap_gw = 1.0;
    s.regions[0].hydro_bio_annual_cap_twh = 0.006;
    using namespace std::chrono;
    const Timestamp start = sys_days{2020y / December / 31};
    const auto traces = testing::flat_traces(1, 96, 0.0, 0.0, 1.0, start);
    const auto dr = simulate(s, Portfolio::zeros(s), traces, {}, {true});
    REQUIRE(dr.years.size() == 2);
    CHECK(dr.years[0].regions[0].hydro_bio_gwh == Approx(6.0));
    CHECK(dr.years[1].regions[0].hydro_bio_gwh == Approx(6.0));
    CHECK(dr.intervals[48].regions[0].hydro_bio == Approx(1.0));
    CHECK(dr.intervals[47].regions[0].hydro_bio == 0.0);
}

TEST_CASE("pooled hydro/bio budget spans regions") {
    auto s = testing::chain_scenario(2, false);
    for (auto& r : s.regions) {
        r.has_hydro_bio = true;
        r.hydro_bio_power_cap_gw = 1.0;
        r.hydro_bio_annual_cap_twh = 0.002;
    }
    s.flags.hydro_bio_shared_budget = true;
    // Only R0 needs hydro: it may use the whole 4 GWh pool.
    std::vector<std::pair<std::string, TimeSeries>> v{{"pv0", testing::constant(0, 48)},
                                                      {"wind0", testing::constant(0, 48)},
                                                      {"load0", testing::constant(1, 48)},
                                                      {"pv1", testing::constant(0, 48)},
                                                      {"wind1", testing::constant(0, 48)},
                                                      {"load1", testing::constant(0, 48)}};
    const auto traces = align(std::move(v));
    const auto dr = simulate(s, Portfolio::zeros(s), traces);
    CHECK(dr.system_totals().hydro_bio_gwh == Approx(4.0));
    s.flags.hydro_bio_shared_budget = false;
    CHECK(simulate(s, Portfolio::zeros(s), traces).system_totals().hydro_bio_gwh == Approx(2.0));
}

TEST_CASE("inflexible fleet charges on its profile") {
    auto s = testing::chain_scenario(1);
    FleetClass cars;
    cars.count = 1e5;
    cars.annual_km = 15000;
    cars.kwh_per_100km = 20;
    cars.flexible_share = 0.8;
    s.demand.fleets = {cars};
    const auto traces = testing::flat_traces(1, 96, 0.0, 1.0, 1.0);
    const auto model = build_dispatch_model(s, traces);
    const auto dr = simulate(model, wind_only(s, 10.0), {true});
    for (std::size_t t = 0; t < dr.intervals.size(); ++t) {
        const auto& o = dr.intervals[t].regions[0];
        CHECK(o.ev_charge == Approx(model.ev_gw[0][t]));
        CHECK(o.ev_charge == Approx(o.ev_requirement));
        CHECK(o.ev_shortfall == 0.0);
    }
}

TEST_CASE("flexible fleet never ends an interval below the floor") {
    auto s = testing::chain_scenario(1);
    s.flags.ev_flexibility_enabled = true;
    FleetClass cars;
    cars.count = 1e6;
    cars.annual_km = 20000;
    cars.kwh_per_100km = 20;
    cars.flexible_share = 0.8;
    cars.battery_kwh = 40;
    s.demand.fleets = {cars};
    const std::size_t n = 48 * 10;
    const auto traces = align({{"pv0", testing::constant(0, n)},
                               {"wind0", synth_trace({SynthKind::Wind, 8, testing::jan1(2021), n, 0.3, 0.2, 0.9})},
                               {"load0", testing::constant(1.0, n)}});
    const auto dr = simulate(s, wind_only(s, 3.0), traces, {}, {true});
    const auto model = build_dispatch_model(s, traces);
    const double floor = 0.25 * model.ev_capacity_gwh[0];
    double min_soc = 1e300;
    for (const auto& iv : dr.intervals) min_soc = std::min(min_soc, iv.regions[0].ev_soc);
    CHECK(min_soc >= floor);
    CHECK(dr.system_totals().min_ev_soc_fraction >= 0.25);
}

TEST_CASE("per-region balance identity on random intervals") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto sc = testing::chain_scenario(3);
    Interconnector ring;
    ring.id = "L3";
    ring.from_region = "R2";
    ring.to_region = "R0";
    ring.length_km = 2500;
    sc.interconnectors.push_back(ring);
    const auto topo = build_topology(sc);
    std::vector<double> draws(48);
    for (int i = 0; i < 2000; ++i) {
        DispatchContext ctx;
        ctx.topology = &topo;
        ctx.ev_flexible = u(rng) < 0.5;
        ctx.shared_hydro = u(rng) < 0.3;
        for (std::size_t e = 0; e < topo.edges.size(); ++e) ctx.edge_capacity.push_back(2.0 * u(rng));
        SystemState st;
        IntervalInputs in;
        for (auto& d : draws) d = 0.5 * u(rng);
        for (int r = 0; r < 3; ++r) {
            st.storage.push_back(StorageState::with_round_trip(2 * u(rng), 10 * u(rng), 0.8, u(rng)));
            EVAggregateState ev{0, 20 * u(rng), 3 * u(rng), 0.25, 0.85};
            ev.soc_gwh = ev.capacity_gwh * (0.25 + 0.75 * u(rng));
            st.ev.push_back(ev);
            st.hydro.push_back({u(rng), 0.001 * u(rng), 0.0});
            in.demand_gw.push_back(3 * u(rng));
            in.vre_gw.push_back(6 * u(rng));
            in.pv_gw.push_back(in.vre_gw.back() * u(rng));
            in.ev_draw_window.emplace_back(draws.data(), 1 + static_cast<std::size_t>(47 * u(rng)));
            in.ev_fixed_gw.push_back(u(rng));
        }
        st.shared_hydro = {3.0, 0.002 * u(rng), 0.0};
        IntervalResult out;
        FlowWorkspace ws;
        step_interval(ctx, st, in, out, ws);
        for (const auto& o : out.regions) {
            REQUIRE(std::abs(balance_residual(o)) <= 1e-9);
            REQUIRE(o.spill >= 0.0);
            REQUIRE(o.unserved >= 0.0);
            REQUIRE(o.unserved <= o.demand + 1e-12);
            // Never charge and discharge in the same interval.
            REQUIRE((o.storage_charge == 0.0 || o.storage_discharge == 0.0));
            // No spill while demand goes unserved in the same region.
            REQUIRE((o.spill == 0.0 || o.unserved == 0.0));
        }
        for (std::size_t r = 0; r < 3; ++r) {
            REQUIRE(st.storage[r].soc_gwh >= 0.0);
            REQUIRE(st.storage[r].soc_gwh <= st.storage[r].energy_cap_gwh + 1e-12);
        }
    }
}

TEST_CASE("more VRE never increases unserved energy without storage") {
    const auto s = testing::chain_scenario(1);
    const std::size_t n = 48 * 7;
    const auto traces = align({{"pv0", synth_trace({SynthKind::Solar, 2, testing::jan1(2021), n, 0.25, 1.0, 0.3})},
                               {"wind0", synth_trace({SynthKind::Wind, 3, testing::jan1(2021), n, 0.35, 0.1, 0.8})},
                               {"load0", testing::constant(2.0, n)}});
    double prev = 1e300;
    for (double gw : {0.0, 1.0, 2.0, 4.0, 8.0}) {
        auto p = Portfolio::zeros(s);
        p.pv_gw = {gw};
        p.wind_gw = {gw};
        const double u = simulate(s, p, traces).system_totals().unserved_gwh;
        CHECK(u <= prev + 1e-9);
        prev = u;
    }
}

TEST_CASE("reliability fractions") {
    DispatchResult dr;
    dr.years.push_back(YearTotals{2021, 17520, std::vector<RegionTotals>(1), 0.0, 0.0});
    dr.years[0].regions[0].demand_gwh = 100000.0;
    CHECK(reliability(dr).overall_fraction == 0.0);
    dr.years[0].regions[0].unserved_gwh = 1.0;
    CHECK(reliability(dr).overall_fraction == Approx(1e-5));

    DispatchResult two;
    two.years.push_back(YearTotals{2021, 17520, std::vector<RegionTotals>(1), 0.0, 0.0});
    two.years.push_back(YearTotals{2022, 17520, std::vector<RegionTotals>(1), 0.0, 0.5});
    two.years[0].regions[0].demand_gwh = 1000.0;
    two.years[1].regions[0].demand_gwh = 1000.0;
    two.years[1].regions[0].unserved_gwh = 10.0;
    const auto rep = reliability(two);
    CHECK(rep.year_fraction[0] == 0.0);
    CHECK(rep.year_fraction[1] == Approx(0.01));
    CHECK(rep.overall_fraction == Approx(0.005));
    CHECK(rep.worst_interval_gw == 0.5);
}

TEST_CASE("burn-in years are simulated but not counted") {
    const auto s = testing::chain_scenario(1);
    const auto traces = testing::flat_traces(1, 17568 + 48, 0.0, 0.0, 1.0, testing::jan1(2020));
    const auto all = simulate(s, Portfolio::zeros(s), traces);
    CHECK(all.years.size() == 2);
    SimulateOptions opts;
    opts.burn_in_years = 1;
    const auto later = simulate(s, Portfolio::zeros(s), traces, {}, opts);
    CHECK(later.first_interval == 17568);
    CHECK(later.counted_intervals == 48);
    REQUIRE(later.years.size() == 1);
    CHECK(later.years[0].year == 2021);
    opts.burn_in_years = 2;
    CHECK_THROWS_AS(simulate(s, Portfolio::zeros(s), traces, {}, opts), Error);
}

TEST_CASE("portfolio layout and validation") {
    const auto s = testing::chain_scenario(3);
    CHECK(decision_dimension(s) == 3 + 3 + 3 + 3 + 2);
    Portfolio p = Portfolio::zeros(s);
    p.pv_gw = {1, 2, 3};
    p.storage_power_gw = {1, 0, 0};
    p.storage_energy_gwh = {4, 0, 0};
    p.link_gw = {7, 8};
    CHECK(portfolio_from_vector(s, to_vector(p)) == p);
    CHECK(validate_portfolio(s, p).empty());
    p.storage_energy_gwh[0] = 0.1;
    CHECK(validate_portfolio(s, p)[0].code == "storage_duration");
    p.storage_energy_gwh[0] = 4;
    p.wind_gw[1] = -1;
    CHECK(validate_portfolio(s, p)[0].code == "negative_cap");
    p.wind_gw.pop_back();
    CHECK(validate_portfolio(s, p)[0].code == "bad_shape");
}

TEST_CASE("single-region slice matches the isolated multi-region run") {
    auto s = testing::chain_scenario(2, false);
    const std::size_t n = 48 * 3;
    const auto traces = align({{"pv0", testing::constant(0.2, n)},
                               {"wind0", synth_trace({SynthKind::Wind, 1, testing::jan1(2021), n, 0.4, 0.1, 0.8})},
                               {"load0", testing::constant(1.0, n)},
                               {"pv1", testing::constant(0.1, n)},
                               {"wind1", synth_trace({SynthKind::Wind, 2, testing::jan1(2021), n, 0.4, 0.1, 0.8})},
                               {"load1", testing::constant(2.0, n)}});
    const auto model = build_dispatch_model(s, traces);
    auto p = Portfolio::zeros(s);
    p.wind_gw = {2.0, 3.0};
    p.storage_power_gw = {0.5, 1.0};
    p.storage_energy_gwh = {3.0, 5.0};
    const auto full = simulate(model, p).region_totals();

    const auto slice = restrict_to_region(model, 1);
    CHECK(slice.region_count() == 1);
    CHECK(slice.scenario->regions[0].id == "R1");
    Portfolio q = Portfolio::zeros(*slice.scenario);
    q.wind_gw = {3.0};
    q.storage_power_gw = {1.0};
    q.storage_energy_gwh = {5.0};
    const auto one = simulate(slice, q).region_totals();
    CHECK(one[0].unserved_gwh == Approx(full[1].unserved_gwh));
    CHECK(one[0].spill_gwh == Approx(full[1].spill_gwh));
    CHECK(one[0].storage_discharge_gwh == Approx(full[1].storage_discharge_gwh));
}
