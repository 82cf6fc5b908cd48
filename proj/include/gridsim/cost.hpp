#pragma once

#include "gridsim/dispatch.hpp"
#include "gridsim/scenario.hpp"

namespace gridsim {

/// MWh produced per kW of capacity per year at a capacity factor of one.
inline constexpr double kMwhPerKwYear = 8.760;

/// r(1+r)^n / ((1+r)^n - 1); 1/n when r == 0.
double capital_recovery_factor(double rate, double lifetime_years);

/// Stand-alone levelised cost of a generator at a capacity factor ($/MWh).
/// Throws Error when the capacity factor is not in (0, 1].
double technology_lcoe(const GeneratorCost& tech, double capacity_factor, double discount_rate);

/// Annualised fixed costs ($/yr) by asset class.
struct AnnualCosts {
    double pv = 0.0;
    double wind = 0.0;
    double storage = 0.0;
    double hvdc = 0.0;
    double hvac = 0.0;

    double generation() const noexcept { return pv + wind; }
    double transmission() const noexcept { return hvdc + hvac; }
    double total() const noexcept { return pv + wind + storage + hvdc + hvac; }
};

/// Capital of each class ($) before annualisation.
AnnualCosts portfolio_capital(const Portfolio& p, const Scenario& s);
AnnualCosts annualize_portfolio(const Portfolio& p, const Scenario& s);

double hydro_bio_purchase_cost(double energy_twh, double price_per_mwh = 50.0);

/// Mean annual energies (MWh/yr) feeding the breakdown.
struct EnergyBasis {
    double delivered_mwh = 0.0;  // demand served
    double generated_mwh = 0.0;  // available VRE (spill included) + hydro/bio
    double pv_mwh = 0.0;
    double wind_mwh = 0.0;
    double hydro_bio_mwh = 0.0;
    double storage_discharge_mwh = 0.0;
};

EnergyBasis energy_basis(const DispatchResult& dr);

struct CostBreakdown {
    double lcog = 0.0;
    double lcob_storage = 0.0;
    double lcob_transmission = 0.0;
    double lcob_spill_loss = 0.0;
    double lcoe = 0.0;
    AnnualCosts annual;
    double vom_annual = 0.0;
    double hydro_bio_annual = 0.0;

    double lcob() const noexcept { return lcob_storage + lcob_transmission + lcob_spill_loss; }
};

/// LCOE = LCOG + storage + transmission + spillage & loss (the last is the
/// residual). Throws Error when nothing was delivered.
CostBreakdown lcoe_breakdown(const AnnualCosts& annual, const EnergyBasis& energy,
                             const TechnologyCosts& costs);

}  // namespace gridsim
