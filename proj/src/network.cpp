#include "gridsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridsim/cost.hpp"

namespace gridsim {

namespace {

constexpr double kFlowEpsilon = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double line_loss_rate(double length_km) {
    return std::min(kMaxLossRate, kLossPerThousandKm * std::max(0.0, length_km) / 1000.0);
}

void FlowWorkspace::reset(const Topology& topo, std::span<const double> edge_capacity) {
    const auto ne = topo.edges.size();
    const auto nn = topo.node_count();
    remaining_capacity.assign(edge_capacity.begin(), edge_capacity.end());
    remaining_capacity.resize(ne, 0.0);
    send_forward.assign(ne, 0.0);
    send_reverse.assign(ne, 0.0);
    loss.assign(ne, 0.0);
    sent.assign(nn, 0.0);
    received.assign(nn, 0.0);
    dist.assign(nn, kInf);
    parent_edge.assign(nn, -1);
    done.assign(nn, 0);
}

// Repeated cheapest-path augmentation. Path cost is -log(1 - r) summed over
// edges, so the cheapest path keeps the largest share of what is sent. Each
// augmentation exhausts a source, fills a sink or saturates an edge.
void balance_flows_inplace(const Topology& topo, std::span<double> positions, FlowWorkspace& ws) {
    const std::size_t nn = topo.node_count();
    if (topo.edges.empty() || nn < 2) return;
    const std::size_t max_rounds = 4 * (nn + topo.edges.size()) + 8;

    for (std::size_t round = 0; round < max_rounds; ++round) {
        bool any_source = false, any_sink = false;
        for (std::size_t n = 0; n < nn; ++n) {
            any_source |= positions[n] > kFlowEpsilon;
            any_sink |= positions[n] < -kFlowEpsilon;
        }
        if (!any_source || !any_sink) return;

        for (std::size_t n = 0; n < nn; ++n) {
            ws.dist[n] = positions[n] > kFlowEpsilon ? 0.0 : kInf;
            ws.parent_edge[n] = -1;
            ws.done[n] = 0;
        }
        long target = -1;
        while (true) {
            long u = -1;
            for (std::size_t n = 0; n < nn; ++n)
                if (!ws.done[n] && ws.dist[n] < kInf && (u < 0 || ws.dist[n] < ws.dist[static_cast<std::size_t>(u)]))
                    u = static_cast<long>(n);
            if (u < 0) break;
            const auto uu = static_cast<std::size_t>(u);
            ws.done[uu] = 1;
            if (positions[uu] < -kFlowEpsilon) {
                target = u;
                break;
            }
            for (auto e : topo.incident[uu]) {
                if (ws.remaining_capacity[e] <= kFlowEpsilon) continue;
                const auto& edge = topo.edges[e];
                const std::size_t v = edge.from == uu ? edge.to : edge.from;
                if (ws.done[v]) continue;
                const double d = ws.dist[uu] - std::log1p(-edge.loss_rate);
                if (d < ws.dist[v]) {
                    ws.dist[v] = d;
                    ws.parent_edge[v] = static_cast<long>(e);
                }
            }
        }
        if (target < 0) return;

        // Walk back to the source, collecting the path sink-first.
        ws.path.clear();
        std::size_t node = static_cast<std::size_t>(target);
        while (ws.parent_edge[node] >= 0) {
            const auto e = static_cast<std::size_t>(ws.parent_edge[node]);
            ws.path.push_back(e);
            const auto& edge = topo.edges[e];
            node = edge.from == node ? edge.to : edge.from;
        }
        const std::size_t source = node;

        // Limits expressed as the amount leaving the source.
        double send = positions[source];
        int binding = 0;  // 0 source, 1 sink, 2 edge
        std::size_t binding_edge = 0;
        double keep = 1.0;
        for (auto it = ws.path.rbegin(); it != ws.path.rend(); ++it) {
            const auto e = *it;
            const double limit = ws.remaining_capacity[e] / keep;
            if (limit < send) {
                send = limit;
                binding = 2;
                binding_edge = e;
            }
            keep *= 1.0 - topo.edges[e].loss_rate;
        }
        const auto t = static_cast<std::size_t>(target);
        const double need = -positions[t] / keep;
        if (need <= send) {
            send = need;
            binding = 1;
        }

        // Push the flow along the path from the source end.
        double flow = send;
        std::size_t at = source;
        for (auto it = ws.path.rbegin(); it != ws.path.rend(); ++it) {
            const auto e = *it;
            const auto& edge = topo.edges[e];
            if (binding == 2 && e == binding_edge)
                ws.remaining_capacity[e] = 0.0;
            else
                ws.remaining_capacity[e] = std::max(0.0, ws.remaining_capacity[e] - flow);
            if (edge.from == at) {
                ws.send_forward[e] += flow;
                at = edge.to;
            } else {
                ws.send_reverse[e] += flow;
                at = edge.from;
            }
            const double lost = flow * edge.loss_rate;
            ws.loss[e] += lost;
            flow -= lost;
        }
        ws.sent[source] += send;
        ws.received[t] += flow;
        positions[source] = binding == 0 ? 0.0 : positions[source] - send;
        positions[t] = binding == 1 ? 0.0 : positions[t] + flow;
        if (binding == 0 && positions[t] > 0.0) positions[t] = 0.0;
    }
}

FlowResult balance_flows(std::span<const double> positions, const Topology& topo,
                         std::span<const double> edge_capacity) {
    FlowWorkspace ws;
    ws.reset(topo, edge_capacity);
    FlowResult out;
    out.positions.assign(positions.begin(), positions.end());
    balance_flows_inplace(topo, out.positions, ws);
    for (std::size_t e = 0; e < topo.edges.size(); ++e) {
        const double r = topo.edges[e].loss_rate;
        for (bool forward : {true, false}) {
            const double send = forward ? ws.send_forward[e] : ws.send_reverse[e];
            if (send <= 0.0) continue;
            out.flows.push_back({topo.edges[e].link, forward, send, send * (1.0 - r), send * r});
        }
    }
    out.sent_gw = std::move(ws.sent);
    out.received_gw = std::move(ws.received);
    return out;
}

double interconnector_capital_cost(const Interconnector& ic, double capacity_gw, const TechnologyCosts& costs) {
    const double mw = capacity_gw * 1000.0;
    const double reserve = 1.0 + ic.reserve_fraction;
    if (ic.kind == LinkKind::Submarine) return costs.hvdc_submarine.capital_per_kw * mw * 1000.0 * reserve;
    const auto& c = costs.hvdc_overhead;
    return (c.line_per_mw_km * ic.length_km + c.converter_per_mw) * mw * reserve;
}

double interconnector_annual_cost(const Interconnector& ic, double capacity_gw, const TechnologyCosts& costs) {
    const double life = ic.kind == LinkKind::Submarine ? costs.hvdc_submarine.lifetime_years
                                                       : costs.hvdc_overhead.lifetime_years;
    return interconnector_capital_cost(ic, capacity_gw, costs) * capital_recovery_factor(costs.discount_rate_real, life);
}

double hvac_connection_capital_cost(double rate_per_kw, double installed_gw) {
    return rate_per_kw * installed_gw * 1e6;
}

double hvac_connection_cost(double rate_per_kw, double installed_gw, const TechnologyCosts& costs) {
    return hvac_connection_capital_cost(rate_per_kw, installed_gw) *
           capital_recovery_factor(costs.discount_rate_real, costs.hvac.lifetime_years);
}

}  // namespace gridsim
