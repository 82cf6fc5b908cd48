#include "gridsim/cost.hpp"

#include <cmath>

#include "gridsim/network.hpp"

namespace gridsim {

double capital_recovery_factor(double rate, double lifetime_years) {
    if (lifetime_years <= 0.0) throw Error("lifetime must be positive");
    if (rate == 0.0) return 1.0 / lifetime_years;
    const double g = std::pow(1.0 + rate, lifetime_years);
    return rate * g / (g - 1.0);
}

double technology_lcoe(const GeneratorCost& tech, double capacity_factor, double discount_rate) {
    if (!(capacity_factor > 0.0 && capacity_factor <= 1.0))
        throw Error("capacity factor " + std::to_string(capacity_factor) + " outside (0, 1]");
    const double per_kw_year = tech.capital_per_kw * capital_recovery_factor(discount_rate, tech.lifetime_years) +
                               tech.fom_per_kw_yr;
    return per_kw_year / (capacity_factor * kMwhPerKwYear) + tech.vom_per_mwh;
}

namespace {

double hvac_rate(const Zone& z, const TechnologyCosts& c) {
    return z.hvac_connection_cost_per_kw.value_or(c.hvac.capital_per_kw);
}

}  // namespace

AnnualCosts portfolio_capital(const Portfolio& p, const Scenario& s) {
    const auto& c = s.costs;
    AnnualCosts k;
    for (std::size_t z = 0; z < s.zones.size(); ++z) {
        k.pv += p.pv_gw[z] * 1e6 * c.pv.capital_per_kw;
        k.wind += p.wind_gw[z] * 1e6 * c.wind.capital_per_kw;
        k.hvac += hvac_connection_capital_cost(hvac_rate(s.zones[z], c), p.pv_gw[z] + p.wind_gw[z]);
    }
    for (std::size_t r = 0; r < s.regions.size(); ++r) {
        k.storage += p.storage_power_gw[r] * 1e6 * c.storage.power_per_kw +
                     p.storage_energy_gwh[r] * 1e6 * c.storage.energy_per_kwh;
        k.hvac += hvac_connection_capital_cost(c.hvac.capital_per_kw * c.hvac.storage_multiplier,
                                               p.storage_power_gw[r]);
    }
    for (std::size_t l = 0; l < s.interconnectors.size(); ++l)
        k.hvdc += interconnector_capital_cost(s.interconnectors[l], p.link_gw[l], c);
    return k;
}

AnnualCosts annualize_portfolio(const Portfolio& p, const Scenario& s) {
    const auto& c = s.costs;
    const double rate = c.discount_rate_real;
    const AnnualCosts k = portfolio_capital(p, s);
    double pv_kw = 0.0, wind_kw = 0.0, storage_kw = 0.0;
    for (double x : p.pv_gw) pv_kw += x * 1e6;
    for (double x : p.wind_gw) wind_kw += x * 1e6;
    for (double x : p.storage_power_gw) storage_kw += x * 1e6;

    AnnualCosts a;
    a.pv = k.pv * capital_recovery_factor(rate, c.pv.lifetime_years) + pv_kw * c.pv.fom_per_kw_yr;
    a.wind = k.wind * capital_recovery_factor(rate, c.wind.lifetime_years) + wind_kw * c.wind.fom_per_kw_yr;
    a.storage = k.storage * capital_recovery_factor(rate, c.storage.lifetime_years) +
                storage_kw * c.storage.fom_per_kw_yr;
    for (std::size_t l = 0; l < s.interconnectors.size(); ++l)
        a.hvdc += interconnector_annual_cost(s.interconnectors[l], p.link_gw[l], c);
    a.hvac = k.hvac * capital_recovery_factor(rate, c.hvac.lifetime_years);
    return a;
}

double hydro_bio_purchase_cost(double energy_twh, double price_per_mwh) { return energy_twh * 1e6 * price_per_mwh; }

EnergyBasis energy_basis(const DispatchResult& dr) {
    EnergyBasis e;
    if (dr.counted_years <= 0.0) return e;
    const RegionTotals t = dr.system_totals();
    const double k = 1000.0 / dr.counted_years;  // GWh over the run -> MWh per year
    e.delivered_mwh = (t.demand_gwh - t.unserved_gwh) * k;
    e.pv_mwh = t.pv_used_gwh * k;
    e.wind_mwh = t.wind_used_gwh * k;
    e.hydro_bio_mwh = t.hydro_bio_gwh * k;
    e.generated_mwh = (t.vre_available_gwh + t.hydro_bio_gwh) * k;
    e.storage_discharge_mwh = t.storage_discharge_gwh * k;
    return e;
}

CostBreakdown lcoe_breakdown(const AnnualCosts& annual, const EnergyBasis& energy, const TechnologyCosts& costs) {
    if (!(energy.delivered_mwh > 0.0)) throw Error("no energy delivered; LCOE undefined");
    CostBreakdown b;
    b.annual = annual;
    const double vom_gen = energy.pv_mwh * costs.pv.vom_per_mwh + energy.wind_mwh * costs.wind.vom_per_mwh;
    const double vom_storage = energy.storage_discharge_mwh * costs.storage.vom_per_mwh;
    b.vom_annual = vom_gen + vom_storage;
    b.hydro_bio_annual = energy.hydro_bio_mwh * costs.hydro_bio_price_per_mwh;

    const double generation = annual.generation() + vom_gen + b.hydro_bio_annual;
    const double total = generation + annual.storage + vom_storage + annual.transmission();
    b.lcoe = total / energy.delivered_mwh;
    b.lcog = energy.generated_mwh > 0.0 ? generation / energy.generated_mwh : 0.0;
    b.lcob_storage = (annual.storage + vom_storage) / energy.delivered_mwh;
    b.lcob_transmission = annual.transmission() / energy.delivered_mwh;
    // Whatever generation cost is not recovered per delivered MWh was spilled
    // or lost on the way.
    b.lcob_spill_loss = b.lcoe - b.lcog - b.lcob_storage - b.lcob_transmission;
    return b;
}

}  // namespace gridsim
