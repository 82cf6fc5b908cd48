#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gridsim/traces.hpp"

namespace gridsim {

/// One class of electrified road (or rail) transport.
///
/// `kwh_per_100km` is the consumption drawn from the battery. Classes that
/// are specified by energy rather than by fleet (rail traction) set
/// `fixed_annual_twh` instead of count/km/intensity; it goes through the
/// same efficiency and loss chain.
struct FleetClass {
    std::string name;
    double count = 0.0;
    double annual_km = 0.0;
    double kwh_per_100km = 0.0;
    double charging_efficiency = 0.85;
    double vampire_loss_per_day = 0.01;
    double tnd_loss = 0.075;
    double flexible_share = 0.0;
    double battery_kwh = 60.0;
    double charger_kw = 7.0;
    double fixed_annual_twh = 0.0;
    std::string profile;  // daily charging weights; empty = flat

    bool operator==(const FleetClass&) const = default;
};

struct HeatingSpec {
    std::string name;
    double fuel_energy_pj = 0.0;
    double fuel_efficiency = 1.0;
    double cop = 1.0;
    double tnd_loss = 0.075;
    std::string profile;  // daily or yearly weights; empty = flat

    bool operator==(const HeatingSpec&) const = default;
};

struct DemandSpec {
    std::map<std::string, std::string> base_trace;  // region id -> trace id (GW)
    std::vector<FleetClass> fleets;
    std::vector<HeatingSpec> heating;
    double industry_gw = 0.0;
    // Region shares of each component; empty means base-demand energy shares.
    std::map<std::string, double> transport_shares;
    std::map<std::string, double> heating_shares;
    std::map<std::string, double> industry_shares;

    bool operator==(const DemandSpec&) const = default;
};

/// Grid-side annual energy of a fleet class in TWh.
double fleet_annual_energy(const FleetClass& f);

/// Battery-side (at the wheels) annual driving energy in TWh.
double fleet_driving_energy(const FleetClass& f);

/// Grid-side annual electricity of an electrified heating end use in TWh.
double heating_annual_energy(const HeatingSpec& h);

/// Weights proportional to `floor + slope * max(0, base_temp - T)` per
/// interval, normalised to sum to one over the series.
std::vector<double> heating_profile_from_temperature(std::span<const double> temperature_c,
                                                     double base_temp_c = 18.0,
                                                     double floor = 0.1, double slope = 1.0);

struct ComposedDemand {
    std::vector<std::string> regions;
    std::vector<std::vector<double>> total_gw;     // region x interval, everything
    std::vector<std::vector<double>> flexible_gw;  // region x interval, schedulable EV part
    // Aggregate flexible EV fleet per region.
    std::vector<double> ev_capacity_gwh;
    std::vector<double> ev_max_charge_gw;
    std::vector<double> ev_charge_efficiency;
    // Annual component energies (TWh/yr) over all regions, for accounting.
    double base_twh = 0.0;
    double transport_twh = 0.0;
    double heating_twh = 0.0;
    double industry_twh = 0.0;
};

/// Builds per-region demand: base + transport + heating + flat industry.
/// Throws Error when a trace or profile id does not resolve.
ComposedDemand compose_demand(const DemandSpec& spec, const std::vector<std::string>& regions,
                              const TraceSet& traces, const ProfileSet& profiles);

}  // namespace gridsim
