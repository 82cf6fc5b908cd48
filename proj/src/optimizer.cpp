#include "gridsim/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace gridsim {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Differential Evolution

std::size_t DEConfig::effective_population() const noexcept {
    const std::size_t n = population_size ? population_size : 10 * dimension();
    return std::max<std::size_t>(4, n);
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::Generations: return "generations";
        case StopReason::Converged: return "converged";
        case StopReason::Stagnated: return "stagnated";
    }
    return "unknown";
}

double reflect_into(double x, Bounds b) {
    if (!(b.hi > b.lo)) return b.lo;
    if (std::isnan(x)) return b.lo;
    if (x >= b.lo && x <= b.hi) return x;
    const double w = b.hi - b.lo;
    double y = std::fmod(x - b.lo, 2.0 * w);
    if (y < 0.0) y += 2.0 * w;
    if (y > w) y = 2.0 * w - y;
    return std::clamp(b.lo + y, b.lo, b.hi);
}

namespace {

double sanitize(double f) {
    return std::isfinite(f) ? f : std::numeric_limits<double>::max();
}

// Evaluates f over every row; rows are handed out to worker threads but each
// result lands in its own slot, so the outcome is independent of scheduling.
void evaluate_all(const Objective& f, const std::vector<std::vector<double>>& xs, std::vector<double>& out,
                  std::size_t threads) {
    out.assign(xs.size(), 0.0);
    const std::size_t workers = std::min(std::max<std::size_t>(1, threads), xs.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = sanitize(f(xs[i]));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < xs.size(); i = next++) out[i] = sanitize(f(xs[i]));
            } catch (...) {
                errors[w] = std::current_exception();
                next = xs.size();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct DEState {
    std::size_t generation = 0;
    std::size_t evaluations = 0;
    std::mt19937_64 rng;
    std::vector<std::vector<double>> population;
    std::vector<double> fitness;
    std::vector<double> history;
};

void save_checkpoint(const std::filesystem::path& path, const DEConfig& cfg, const DEState& st) {
    std::ostringstream rng;
    rng << st.rng;
    json j;
    j["format"] = "gridsim-de-checkpoint";
    j["version"] = 1;
    j["seed"] = cfg.seed;
    j["dimension"] = cfg.dimension();
    j["generation"] = st.generation;
    j["evaluations"] = st.evaluations;
    j["rng"] = rng.str();
    j["population"] = st.population;
    j["fitness"] = st.fitness;
    j["history"] = st.history;
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write checkpoint '" + tmp + "'");
        out << j.dump();
        if (!out) throw Error("failed writing checkpoint '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

bool load_checkpoint(const std::filesystem::path& path, const DEConfig& cfg, DEState& st) {
    if (!std::filesystem::exists(path)) return false;
    std::ifstream in(path, std::ios::binary);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("checkpoint '" + path.string() + "' is unreadable: " + e.what());
    }
    try {
        if (j.at("format") != "gridsim-de-checkpoint") throw Error("not a DE checkpoint");
        if (j.at("dimension").get<std::size_t>() != cfg.dimension())
            throw Error("dimension " + j.at("dimension").dump() + " does not match the problem");
        st.generation = j.at("generation").get<std::size_t>();
        st.evaluations = j.at("evaluations").get<std::size_t>();
        std::istringstream rng(j.at("rng").get<std::string>());
        rng >> st.rng;
        if (!rng) throw Error("bad RNG state");
        st.population = j.at("population").get<std::vector<std::vector<double>>>();
        st.fitness = j.at("fitness").get<std::vector<double>>();
        st.history = j.at("history").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw Error("checkpoint '" + path.string() + "': " + e.what());
    } catch (const Error& e) {
        throw Error("checkpoint '" + path.string() + "': " + e.what());
    }
    if (st.population.size() != cfg.effective_population() || st.fitness.size() != st.population.size())
        throw Error("checkpoint '" + path.string() + "': population size does not match the configuration");
    return true;
}

bool all_identical(const std::vector<std::vector<double>>& pop) {
    for (std::size_t i = 1; i < pop.size(); ++i)
        if (pop[i] != pop[0]) return false;
    return true;
}

}  // namespace

DEResult de_optimize(const DEConfig& cfg, const Objective& objective,
                     const std::function<void(const GenerationReport&)>& progress) {
    const std::size_t dim = cfg.dimension();
    if (dim == 0) throw Error("optimizer needs at least one decision variable");
    for (const auto& b : cfg.bounds)
        if (!(b.lo <= b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) throw Error("invalid variable bounds");
    if (!(cfg.differential_weight > 0.0 && cfg.differential_weight <= 2.0))
        throw Error("differential weight must be in (0, 2]");
    if (!(cfg.crossover_rate >= 0.0 && cfg.crossover_rate <= 1.0)) throw Error("crossover rate must be in [0, 1]");
    const std::size_t np = cfg.effective_population();

    DEState st;
    st.rng.seed(cfg.seed);
    const bool resumed = cfg.checkpoint && load_checkpoint(*cfg.checkpoint, cfg, st);
    if (!resumed) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (const auto& seed_row : cfg.initial_population) {
            if (st.population.size() == np) break;
            if (seed_row.size() != dim) throw Error("initial individual has the wrong dimension");
            std::vector<double> x(dim);
            for (std::size_t j = 0; j < dim; ++j) x[j] = reflect_into(seed_row[j], cfg.bounds[j]);
            st.population.push_back(std::move(x));
        }
        while (st.population.size() < np) {
            std::vector<double> x(dim);
            for (std::size_t j = 0; j < dim; ++j) {
                const auto& b = cfg.bounds[j];
                x[j] = b.lo + unit(st.rng) * (b.hi - b.lo);
            }
            st.population.push_back(std::move(x));
        }
        evaluate_all(objective, st.population, st.fitness, cfg.threads);
        st.evaluations = np;
        st.history.push_back(*std::min_element(st.fitness.begin(), st.fitness.end()));
        if (cfg.checkpoint) save_checkpoint(*cfg.checkpoint, cfg, st);
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, np - 1);
    std::uniform_int_distribution<std::size_t> gene(0, dim - 1);
    std::vector<std::vector<double>> trials(np, std::vector<double>(dim));
    std::vector<double> trial_fitness;
    DEResult res;

    while (true) {
        if (st.generation >= cfg.generations) {
            res.stop = StopReason::Generations;
            break;
        }
        if (all_identical(st.population)) {
            res.stop = StopReason::Stagnated;
            break;
        }
        const std::size_t w = cfg.convergence_window;
        if (w > 0 && st.history.size() > w) {
            const double before = st.history[st.history.size() - 1 - w];
            const double now = st.history.back();
            if (before - now <= cfg.convergence_tolerance * std::max(1.0, std::abs(now))) {
                res.stop = StopReason::Converged;
                break;
            }
        }

        // Trials are drawn in a fixed order from the single generator.
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t a, b, c;
            do a = pick(st.rng); while (a == i);
            do b = pick(st.rng); while (b == i || b == a);
            do c = pick(st.rng); while (c == i || c == a || c == b);
            const std::size_t forced = gene(st.rng);
            const auto& xi = st.population[i];
            for (std::size_t j = 0; j < dim; ++j) {
                const bool take = unit(st.rng) < cfg.crossover_rate || j == forced;
                const double v = take ? st.population[a][j] +
                                            cfg.differential_weight * (st.population[b][j] - st.population[c][j])
                                      : xi[j];
                trials[i][j] = reflect_into(v, cfg.bounds[j]);
            }
        }
        evaluate_all(objective, trials, trial_fitness, cfg.threads);
        for (std::size_t i = 0; i < np; ++i) {
            if (trial_fitness[i] <= st.fitness[i]) {
                st.population[i] = trials[i];
                st.fitness[i] = trial_fitness[i];
            }
        }
        st.evaluations += np;
        ++st.generation;
        st.history.push_back(*std::min_element(st.fitness.begin(), st.fitness.end()));
        if (progress) progress({st.generation, st.history.back(), st.evaluations});
        if (cfg.checkpoint) save_checkpoint(*cfg.checkpoint, cfg, st);
    }

    const auto best = static_cast<std::size_t>(std::min_element(st.fitness.begin(), st.fitness.end()) - st.fitness.begin());
    res.best = st.population[best];
    res.best_value = st.fitness[best];
    res.history = st.history;
    res.generations = st.generation;
    res.evaluations = st.evaluations;
    return res;
}

// ---------------------------------------------------------------------------
// Portfolio evaluation

double reliability_penalty(double unserved_fraction, double limit, double weight) {
    return weight * std::max(0.0, unserved_fraction - limit);
}

namespace {

double demand_mwh_per_year(const DispatchResult& dr) {
    if (dr.counted_years <= 0.0) return 0.0;
    return dr.system_totals().demand_gwh * 1000.0 / dr.counted_years;
}

// LCOE from the breakdown; with nothing delivered the whole bill is spread
// over the demand instead, so the optimizer still sees a gradient.
double lcoe_or_fallback(const AnnualCosts& annual, const EnergyBasis& energy, const TechnologyCosts& costs,
                        double demand_mwh, CostBreakdown* breakdown) {
    if (energy.delivered_mwh > 0.0) {
        auto b = lcoe_breakdown(annual, energy, costs);
        if (breakdown) *breakdown = b;
        return b.lcoe;
    }
    if (breakdown) *breakdown = CostBreakdown{0, 0, 0, 0, 0, annual, 0, 0};
    const double bill = annual.total();
    const double lcoe = demand_mwh > 0.0 ? bill / demand_mwh : 0.0;
    if (breakdown) breakdown->lcoe = lcoe;
    return lcoe;
}

}  // namespace

Evaluation evaluate_detailed(const DispatchModel& model, const Portfolio& p, const SimulateOptions& opts) {
    const Scenario& s = *model.scenario;
    Evaluation ev;
    ev.portfolio = p;
    ev.dispatch = simulate(model, p, opts);
    ev.energy = energy_basis(ev.dispatch);
    ev.reliability = reliability(ev.dispatch);
    const AnnualCosts annual = annualize_portfolio(p, s);
    ev.fitness.lcoe = lcoe_or_fallback(annual, ev.energy, s.costs, demand_mwh_per_year(ev.dispatch), &ev.costs);
    ev.fitness.unserved_fraction = ev.reliability.overall_fraction;
    ev.fitness.penalty =
        reliability_penalty(ev.fitness.unserved_fraction, s.reliability_limit, s.optimizer.penalty_weight);
    ev.fitness.total = ev.fitness.lcoe + ev.fitness.penalty;
    return ev;
}

Fitness evaluate(const DispatchModel& model, const Portfolio& p) {
    const Scenario& s = *model.scenario;
    const DispatchResult dr = simulate(model, p);
    const EnergyBasis energy = energy_basis(dr);
    Fitness f;
    f.lcoe = lcoe_or_fallback(annualize_portfolio(p, s), energy, s.costs, demand_mwh_per_year(dr), nullptr);
    f.unserved_fraction = reliability(dr).overall_fraction;
    f.penalty = reliability_penalty(f.unserved_fraction, s.reliability_limit, s.optimizer.penalty_weight);
    f.total = f.lcoe + f.penalty;
    return f;
}

std::vector<Bounds> decision_bounds(const Scenario& s) {
    const auto& o = s.optimizer;
    auto item = [&](const std::string& kind, const std::string& id, Bounds dflt) {
        auto it = o.item_bounds.find(kind + ":" + id);
        return it == o.item_bounds.end() ? dflt : it->second;
    };
    std::vector<Bounds> b;
    for (const auto& z : s.zones) b.push_back(item("pv_gw", z.id, o.pv_gw));
    for (const auto& z : s.zones) b.push_back(item("wind_gw", z.id, o.wind_gw));
    for (const auto& r : s.regions) b.push_back(item("storage_power_gw", r.id, o.storage_power_gw));
    for (const auto& r : s.regions) b.push_back(item("storage_energy_gwh", r.id, o.storage_energy_gwh));
    for (const auto& ic : s.interconnectors)
        b.push_back(s.flags.interconnection_enabled ? item("link_gw", ic.id, o.link_gw) : Bounds{0.0, 0.0});
    return b;
}

Portfolio decode_portfolio(const Scenario& s, std::span<const double> x) {
    Portfolio p = portfolio_from_vector(s, x);
    for (std::size_t r = 0; r < p.storage_power_gw.size(); ++r)
        p.storage_power_gw[r] = std::min(p.storage_power_gw[r], p.storage_energy_gwh[r] / kIntervalHours);
    return p;
}

DEConfig de_config_for(const Scenario& s, std::uint64_t seed, std::size_t threads) {
    DEConfig c;
    const auto& o = s.optimizer;
    c.population_size = o.population;
    c.generations = o.generations;
    c.differential_weight = o.differential_weight;
    c.crossover_rate = o.crossover_rate;
    c.seed = seed;
    c.bounds = decision_bounds(s);
    c.convergence_window = o.convergence_window;
    c.convergence_tolerance = o.convergence_tolerance;
    c.threads = threads;
    return c;
}

namespace {

// Positions of one region's variables inside the full decision vector.
std::vector<std::size_t> region_slots(const Scenario& s, std::size_t region) {
    const std::size_t nz = s.zones.size(), nr = s.regions.size();
    std::vector<std::size_t> slots;
    const auto& rid = s.regions[region].id;
    for (std::size_t z = 0; z < nz; ++z)
        if (s.zones[z].region == rid) slots.push_back(z);
    for (std::size_t z = 0; z < nz; ++z)
        if (s.zones[z].region == rid) slots.push_back(nz + z);
    slots.push_back(2 * nz + region);
    slots.push_back(2 * nz + nr + region);
    return slots;
}

std::uint64_t region_seed(std::uint64_t seed, std::size_t region) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (region + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

OptimizationResult optimize_portfolio(const DispatchModel& model, const DEConfig& base,
                                      const std::function<void(const std::string&, const GenerationReport&)>& progress) {
    const Scenario& s = *model.scenario;
    OptimizationResult out;
    const bool isolated = model.topology.edges.empty() && s.regions.size() > 1;

    if (!isolated) {
        DEConfig cfg = base;
        cfg.bounds = decision_bounds(s);
        Objective f = [&](std::span<const double> x) { return evaluate(model, decode_portfolio(s, x)).total; };
        auto report = [&](const GenerationReport& g) {
            if (progress) progress(s.id, g);
        };
        out.de = de_optimize(cfg, f, report);
        out.best = decode_portfolio(s, out.de.best);
        out.fitness = evaluate(model, out.best);
        return out;
    }

    // Isolated grids do not interact, so each region is its own problem.
    out.decomposed = true;
    out.best = Portfolio::zeros(s);
    std::vector<double> merged = to_vector(out.best);
    for (std::size_t r = 0; r < s.regions.size(); ++r) {
        const DispatchModel sub = restrict_to_region(model, r);
        const Scenario& ss = *sub.scenario;
        const auto slots = region_slots(s, r);
        DEConfig cfg = base;
        cfg.bounds = decision_bounds(ss);
        cfg.seed = region_seed(base.seed, r);
        if (base.checkpoint) cfg.checkpoint = base.checkpoint->string() + "." + s.regions[r].id;
        cfg.initial_population.clear();
        for (const auto& row : base.initial_population) {
            if (row.size() != merged.size()) continue;
            std::vector<double> x;
            for (auto k : slots) x.push_back(row[k]);
            cfg.initial_population.push_back(std::move(x));
        }
        Objective f = [&](std::span<const double> x) { return evaluate(sub, decode_portfolio(ss, x)).total; };
        const std::string label = s.regions[r].id;
        auto report = [&](const GenerationReport& g) {
            if (progress) progress(label, g);
        };
        RegionRun run{label, de_optimize(cfg, f, report), {}};
        const auto decoded = to_vector(decode_portfolio(ss, run.de.best));
        for (std::size_t k = 0; k < slots.size(); ++k) merged[slots[k]] = decoded[k];
        run.fitness = evaluate(sub, decode_portfolio(ss, run.de.best));
        out.regions.push_back(std::move(run));
    }
    out.best = portfolio_from_vector(s, merged);
    out.fitness = evaluate(model, out.best);
    return out;
}

// ---------------------------------------------------------------------------
// Sensitivity

std::string to_string(CostParameter p) {
    switch (p) {
        case CostParameter::PvCapital: return "pv_capital";
        case CostParameter::WindCapital: return "wind_capital";
        case CostParameter::StorageCapital: return "storage_capital";
        case CostParameter::HvdcCapital: return "hvdc_capital";
        case CostParameter::HvacCapital: return "hvac_capital";
        case CostParameter::HydroBioPrice: return "hydro_bio_price";
        case CostParameter::DiscountRate: return "discount_rate";
    }
    return "unknown";
}

std::vector<CostParameter> all_cost_parameters() {
    return {CostParameter::PvCapital,   CostParameter::WindCapital,   CostParameter::StorageCapital,
            CostParameter::HvdcCapital, CostParameter::HvacCapital,   CostParameter::HydroBioPrice,
            CostParameter::DiscountRate};
}

std::optional<CostParameter> cost_parameter_from_string(std::string_view name) {
    for (auto p : all_cost_parameters())
        if (to_string(p) == name) return p;
    return std::nullopt;
}

TechnologyCosts scale_cost(const TechnologyCosts& c, CostParameter p, double m) {
    TechnologyCosts out = c;
    switch (p) {
        case CostParameter::PvCapital: out.pv.capital_per_kw *= m; break;
        case CostParameter::WindCapital: out.wind.capital_per_kw *= m; break;
        case CostParameter::StorageCapital:
            out.storage.power_per_kw *= m;
            out.storage.energy_per_kwh *= m;
            break;
        case CostParameter::HvdcCapital:
            out.hvdc_overhead.line_per_mw_km *= m;
            out.hvdc_overhead.converter_per_mw *= m;
            out.hvdc_submarine.capital_per_kw *= m;
            break;
        case CostParameter::HvacCapital: out.hvac.capital_per_kw *= m; break;
        case CostParameter::HydroBioPrice: out.hydro_bio_price_per_mwh *= m; break;
        case CostParameter::DiscountRate: out.discount_rate_real *= m; break;
    }
    return out;
}

std::vector<double> sensitivity_multipliers(std::size_t steps) {
    if (steps <= 1) return {1.0};
    std::vector<double> m(steps);
    for (std::size_t i = 0; i < steps; ++i)
        m[i] = 0.75 + 0.5 * static_cast<double>(i) / static_cast<double>(steps - 1);
    return m;
}

std::vector<SensitivityRow> sensitivity_sweep(const DispatchModel& model, const Portfolio& p,
                                              const SensitivityOptions& opts) {
    const Scenario& s = *model.scenario;
    // The portfolio is fixed, so one dispatch run serves every cost case.
    const DispatchResult dr = simulate(model, p);
    const EnergyBasis energy = energy_basis(dr);
    const double demand = demand_mwh_per_year(dr);
    const double baseline = lcoe_or_fallback(annualize_portfolio(p, s), energy, s.costs, demand, nullptr);
    const double baseline_opt = opts.reoptimize ? optimize_portfolio(model, opts.de).fitness.lcoe : baseline;

    struct Group {
        CostParameter param;
        std::vector<SensitivityRow> rows;
        double swing = 0.0;
    };
    std::vector<Group> groups;
    for (auto param : opts.parameters) {
        Group g{param, {}, 0.0};
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double m : sensitivity_multipliers(opts.steps)) {
            Scenario scaled = s;
            scaled.costs = scale_cost(s.costs, param, m);
            if (param == CostParameter::HvacCapital)
                for (auto& z : scaled.zones)
                    if (z.hvac_connection_cost_per_kw) *z.hvac_connection_cost_per_kw *= m;
            double lcoe;
            if (opts.reoptimize) {
                DispatchModel scaled_model = model;
                scaled_model.scenario = std::make_shared<const Scenario>(scaled);
                lcoe = optimize_portfolio(scaled_model, opts.de).fitness.lcoe;
            } else {
                lcoe = lcoe_or_fallback(annualize_portfolio(p, scaled), energy, scaled.costs, demand, nullptr);
            }
            const double ref = opts.reoptimize ? baseline_opt : baseline;
            g.rows.push_back({param, m, lcoe, lcoe - ref});
            lo = std::min(lo, lcoe);
            hi = std::max(hi, lcoe);
        }
        g.swing = g.rows.empty() ? 0.0 : hi - lo;
        groups.push_back(std::move(g));
    }
    std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.swing > b.swing; });
    std::vector<SensitivityRow> rows;
    for (auto& g : groups) rows.insert(rows.end(), g.rows.begin(), g.rows.end());
    return rows;
}

}  // namespace gridsim
