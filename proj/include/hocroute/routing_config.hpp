#pragma once

#include <limits>
#include <vector>

#include "hocroute/losses.hpp"

namespace hocroute {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Task configuration T = (loss, per-oracle routing penalties, abstention penalty).
/// abstain_penalty = +inf disables abstention.
struct RoutingConfig {
    LossSpec loss;
    std::vector<double> route_penalties{0.0};
    double abstain_penalty = kInfinity;

    RoutingConfig() = default;
    RoutingConfig(LossSpec l, std::vector<double> alphas, double beta)
        : loss(l), route_penalties(std::move(alphas)), abstain_penalty(beta) {
        validate();
    }
    RoutingConfig(LossSpec l, double alpha, double beta) : RoutingConfig(l, std::vector<double>{alpha}, beta) {}

    std::size_t num_oracles() const noexcept { return route_penalties.size(); }

    void validate() const;
};

}  // namespace hocroute
