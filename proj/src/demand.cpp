#include "gridsim/demand.hpp"

#include <cmath>
#include <numeric>

#include "gridsim/error.hpp"

namespace gridsim {

namespace {

constexpr double kDaysPerYear = 365.0;
constexpr double kPjPerTwh = 3.6;
constexpr double kWeightTolerance = 1e-9;

/// Fraction of a component's annual energy falling in interval t.
class ProfileShape {
public:
    ProfileShape(const std::string& id, const ProfileSet& profiles) {
        if (id.empty()) return;
        auto it = profiles.find(id);
        if (it == profiles.end()) throw Error("unresolved profile id '" + id + "'");
        weights_ = &it->second;
        const auto n = weights_->size();
        if (n != kIntervalsPerDay && n != 365 * kIntervalsPerDay)
            throw Error("profile '" + id + "' has " + std::to_string(n) + " rows, expected 48 or 17520");
        const double sum = std::accumulate(weights_->begin(), weights_->end(), 0.0);
        if (std::abs(sum - 1.0) > kWeightTolerance)
            throw Error("profile '" + id + "' weights sum to " + std::to_string(sum) + ", expected 1");
        for (double w : *weights_)
            if (w < 0.0) throw Error("profile '" + id + "' has a negative weight");
    }

    double fraction(const Calendar& cal, std::size_t t) const {
        const double days = days_in_year(cal.years[cal.year_index[t]]);
        if (!weights_) return 1.0 / (days * kIntervalsPerDay);
        if (weights_->size() == kIntervalsPerDay) return (*weights_)[cal.slot[t]] / days;
        const std::size_t doy = std::min<std::size_t>(cal.day_of_year[t], 364);
        return (*weights_)[doy * kIntervalsPerDay + cal.slot[t]];
    }

private:
    const std::vector<double>* weights_ = nullptr;
};

std::vector<double> resolve_shares(const std::map<std::string, double>& given,
                                   const std::vector<std::string>& regions,
                                   const std::vector<double>& fallback) {
    std::vector<double> out(regions.size(), 0.0);
    if (given.empty()) return fallback;
    for (std::size_t r = 0; r < regions.size(); ++r) {
        auto it = given.find(regions[r]);
        if (it != given.end()) out[r] = it->second;
    }
    return out;
}

}  // namespace

double fleet_driving_energy(const FleetClass& f) {
    if (f.fixed_annual_twh > 0.0) return f.fixed_annual_twh;
    return f.count * f.annual_km * f.kwh_per_100km / 100.0 / 1e9;
}

double fleet_annual_energy(const FleetClass& f) {
    const double driving = fleet_driving_energy(f);
    if (driving == 0.0 && f.count == 0.0) return 0.0;
    const double at_grid = driving / f.charging_efficiency * (1.0 + f.tnd_loss);
    const double vampire = f.count * f.battery_kwh * f.vampire_loss_per_day * kDaysPerYear / 1e9;
    return at_grid + vampire;
}

double heating_annual_energy(const HeatingSpec& h) {
    if (std::isinf(h.cop)) return 0.0;
    const double useful_pj = h.fuel_energy_pj * h.fuel_efficiency;
    return useful_pj / h.cop / kPjPerTwh * (1.0 + h.tnd_loss);
}

std::vector<double> heating_profile_from_temperature(std::span<const double> temperature_c, double base_temp_c,
                                                     double floor, double slope) {
    std::vector<double> w(temperature_c.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = floor + slope * std::max(0.0, base_temp_c - temperature_c[i]);
        sum += w[i];
    }
    if (sum <= 0.0) throw Error("heating profile has zero total weight");
    for (double& x : w) x /= sum;
    return w;
}

ComposedDemand compose_demand(const DemandSpec& spec, const std::vector<std::string>& regions,
                              const TraceSet& traces, const ProfileSet& profiles) {
    const std::size_t n = traces.horizon();
    const std::size_t nr = regions.size();
    const Calendar cal = Calendar::build(traces.start(), n);
    const double years = static_cast<double>(n) * kIntervalHours / kHoursPerYear;

    ComposedDemand out;
    out.regions = regions;
    out.total_gw.assign(nr, std::vector<double>(n, 0.0));
    out.flexible_gw.assign(nr, std::vector<double>(n, 0.0));
    out.ev_capacity_gwh.assign(nr, 0.0);
    out.ev_max_charge_gw.assign(nr, 0.0);
    out.ev_charge_efficiency.assign(nr, 0.85);

    std::vector<double> base_twh(nr, 0.0);
    for (std::size_t r = 0; r < nr; ++r) {
        auto it = spec.base_trace.find(regions[r]);
        if (it == spec.base_trace.end()) continue;
        if (!traces.contains(it->second))
            throw Error("region '" + regions[r] + "': unresolved base demand trace '" + it->second + "'");
        const auto& v = traces.at(it->second).values;
        std::copy(v.begin(), v.end(), out.total_gw[r].begin());
        const double gwh = std::accumulate(v.begin(), v.end(), 0.0) * kIntervalHours;
        base_twh[r] = years > 0.0 ? gwh / 1000.0 / years : 0.0;
    }
    const double base_total = std::accumulate(base_twh.begin(), base_twh.end(), 0.0);
    out.base_twh = base_total;
    std::vector<double> energy_shares(nr, nr ? 1.0 / static_cast<double>(nr) : 0.0);
    if (base_total > 0.0)
        for (std::size_t r = 0; r < nr; ++r) energy_shares[r] = base_twh[r] / base_total;

    const auto transport = resolve_shares(spec.transport_shares, regions, energy_shares);
    const auto heating = resolve_shares(spec.heating_shares, regions, energy_shares);
    const auto industry = resolve_shares(spec.industry_shares, regions, energy_shares);

    auto add_component = [&](double annual_twh, const std::vector<double>& shares, const ProfileShape& shape,
                             double flexible_share) {
        if (annual_twh == 0.0) return;
        for (std::size_t t = 0; t < n; ++t) {
            const double gw = annual_twh * 1000.0 * shape.fraction(cal, t) / kIntervalHours;
            for (std::size_t r = 0; r < nr; ++r) {
                const double p = gw * shares[r];
                out.total_gw[r][t] += p;
                if (flexible_share > 0.0) out.flexible_gw[r][t] += p * flexible_share;
            }
        }
    };

    std::vector<double> eff_weight(nr, 0.0);
    for (const auto& f : spec.fleets) {
        const ProfileShape shape(f.profile, profiles);
        const double twh = fleet_annual_energy(f);
        out.transport_twh += twh;
        add_component(twh, transport, shape, f.flexible_share);
        if (f.flexible_share > 0.0) {
            for (std::size_t r = 0; r < nr; ++r) {
                const double vehicles = f.count * f.flexible_share * transport[r];
                const double cap = vehicles * f.battery_kwh / 1e6;
                out.ev_capacity_gwh[r] += cap;
                out.ev_max_charge_gw[r] += vehicles * f.charger_kw / 1e6;
                eff_weight[r] += cap * f.charging_efficiency;
            }
        }
    }
    for (std::size_t r = 0; r < nr; ++r)
        if (out.ev_capacity_gwh[r] > 0.0) out.ev_charge_efficiency[r] = eff_weight[r] / out.ev_capacity_gwh[r];

    for (const auto& h : spec.heating) {
        const ProfileShape shape(h.profile, profiles);
        const double twh = heating_annual_energy(h);
        out.heating_twh += twh;
        add_component(twh, heating, shape, 0.0);
    }

    if (spec.industry_gw != 0.0) {
        out.industry_twh = spec.industry_gw * kHoursPerYear / 1000.0;
        for (std::size_t r = 0; r < nr; ++r)
            for (std::size_t t = 0; t < n; ++t) out.total_gw[r][t] += spec.industry_gw * industry[r];
    }
    return out;
}

}  // namespace gridsim
