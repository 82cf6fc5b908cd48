#pragma once

#include <span>
#include <string>
#include <vector>

#include "gridsim/scenario.hpp"

namespace gridsim {

inline constexpr double kLossPerThousandKm = 0.03;
inline constexpr double kMaxLossRate = 0.5;

/// HVDC loss fraction for a line of the given length (capped at 0.5).
double line_loss_rate(double length_km);

/// Flow on one interconnector. Direction is from `from_region` to
/// `to_region` when `forward`; receive = send * (1 - loss rate).
struct LinkFlow {
    std::size_t link = 0;
    bool forward = true;
    double send_gw = 0.0;
    double receive_gw = 0.0;
    double loss_gw = 0.0;
};

struct FlowResult {
    std::vector<LinkFlow> flows;
    std::vector<double> positions;  // updated net positions per node
    std::vector<double> sent_gw;     // per node, leaving as export
    std::vector<double> received_gw; // per node, arriving as import
};

/// Per-link accumulators for in-place balancing inside dispatch.
struct FlowWorkspace {
    std::vector<double> remaining_capacity;  // per topology edge
    std::vector<double> send_forward;        // per topology edge
    std::vector<double> send_reverse;
    std::vector<double> loss;
    std::vector<double> sent;      // per node
    std::vector<double> received;  // per node
    // Scratch for path search.
    std::vector<double> dist;
    std::vector<long> parent_edge;
    std::vector<char> done;
    std::vector<std::size_t> path;

    void reset(const Topology& topo, std::span<const double> edge_capacity);
};

/// Moves surplus (positive positions) toward deficit (negative positions)
/// along cheapest-loss paths until no surplus-to-deficit path with spare
/// capacity remains. Updates `positions` and the workspace in place.
void balance_flows_inplace(const Topology& topo, std::span<double> positions, FlowWorkspace& ws);

/// Value-returning wrapper. `edge_capacity` is indexed like topo.edges.
FlowResult balance_flows(std::span<const double> positions, const Topology& topo,
                         std::span<const double> edge_capacity);

/// Annualised cost ($/yr) of new transfer capacity on an interconnector,
/// including the N-1 reserve.
double interconnector_capital_cost(const Interconnector& ic, double capacity_gw,
                                   const TechnologyCosts& costs);
double interconnector_annual_cost(const Interconnector& ic, double capacity_gw,
                                  const TechnologyCosts& costs);

/// AC connection of a renewable zone to its HVDC node.
double hvac_connection_capital_cost(double rate_per_kw, double installed_gw);
double hvac_connection_cost(double rate_per_kw, double installed_gw, const TechnologyCosts& costs);

}  // namespace gridsim
