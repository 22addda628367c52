#include "hocroute/routing_config.hpp"

#include <cmath>
#include <string>

namespace hocroute {

void RoutingConfig::validate() const {
    loss.validate();
    if (route_penalties.empty()) throw InvalidInput("at least one routing penalty is required");
    for (double a : route_penalties) {
        if (std::isnan(a) || a < 0.0) throw InvalidInput("routing penalty must be >= 0, got " + std::to_string(a));
    }
    if (std::isnan(abstain_penalty) || abstain_penalty < 0.0) {
        throw InvalidInput("abstention penalty must be >= 0, got " + std::to_string(abstain_penalty));
    }
}

}  // namespace hocroute
