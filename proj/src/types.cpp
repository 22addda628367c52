#include "hocroute/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hocroute {

LabelDistribution::LabelDistribution(std::vector<double> probs, double sum_tolerance)
    : probs_(std::move(probs)) {
    if (probs_.size() < 2) {
        throw InvalidInput("label distribution needs at least 2 classes, got " +
                           std::to_string(probs_.size()));
    }
    double sum = 0.0;
    for (double& p : probs_) {
        if (!std::isfinite(p)) throw InvalidInput("label distribution entry is not finite");
        if (p < -kSimplexTolerance || p > 1.0 + kSimplexTolerance) {
            throw InvalidInput("label distribution entry outside [0, 1]: " + std::to_string(p));
        }
        p = std::clamp(p, 0.0, 1.0);
        sum += p;
    }
    if (std::abs(sum - 1.0) > sum_tolerance) {
        throw InvalidInput("label distribution sums to " + std::to_string(sum));
    }
    // Already-normalized vectors are kept bit-for-bit so that stored models reload unchanged.
    if (std::abs(sum - 1.0) > kRenormalizeThreshold) {
        for (double& p : probs_) p /= sum;
    }
}

LabelDistribution LabelDistribution::one_hot(std::size_t cls, std::size_t num_classes) {
    if (cls >= num_classes) throw InvalidInput("class index out of range");
    std::vector<double> v(num_classes, 0.0);
    v[cls] = 1.0;
    return LabelDistribution(std::move(v));
}

LabelDistribution LabelDistribution::uniform(std::size_t num_classes) {
    return LabelDistribution(std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

std::size_t LabelDistribution::argmax() const noexcept {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double l1_distance(const LabelDistribution& a, const LabelDistribution& b) {
    if (a.num_classes() != b.num_classes()) throw InvalidInput("class count mismatch");
    double d = 0.0;
    for (std::size_t c = 0; c < a.num_classes(); ++c) d += std::abs(a[c] - b[c]);
    return d;
}

LabelDistribution mean_of(std::span<const LabelDistribution> points) {
    if (points.empty()) throw InvalidInput("mean of an empty set of distributions");
    const std::size_t n = points.front().num_classes();
    std::vector<double> acc(n, 0.0);
    for (const auto& p : points) {
        if (p.num_classes() != n) throw InvalidInput("class count mismatch");
        for (std::size_t c = 0; c < n; ++c) acc[c] += p[c];
    }
    for (double& v : acc) v /= static_cast<double>(points.size());
    return LabelDistribution(std::move(acc));
}

LabelDistribution snapshot_mean(std::span<const int> labels, std::size_t num_classes) {
    if (labels.empty()) throw InvalidInput("snapshot has no labels");
    std::vector<double> counts(num_classes, 0.0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw InvalidInput("label index " + std::to_string(y) + " out of range for " +
                               std::to_string(num_classes) + " classes");
        }
        counts[static_cast<std::size_t>(y)] += 1.0;
    }
    const double k = static_cast<double>(labels.size());
    for (double& c : counts) c /= k;
    return LabelDistribution(std::move(counts));
}

SnapshotExample make_example(std::string id, std::optional<std::vector<double>> features,
                             LabelDistribution weak_pred, std::vector<int> labels,
                             std::optional<LabelDistribution> p_star) {
    auto mean = snapshot_mean(labels, weak_pred.num_classes());
    if (p_star && p_star->num_classes() != weak_pred.num_classes()) {
        throw InvalidInput("p_star class count mismatch");
    }
    return SnapshotExample{std::move(id), std::move(features), std::move(weak_pred),
                           std::move(labels), std::move(mean), std::move(p_star)};
}

const LabelDistribution& ground_truth(const SnapshotExample& ex, TruthSource source) {
    if (source == TruthSource::SnapshotMean) return ex.snapshot_mean;
    if (!ex.p_star) throw InvalidInput("example '" + ex.id + "' has no exact p*");
    return *ex.p_star;
}

std::string to_string(const Action& a) {
    switch (a.kind) {
        case Action::Kind::Predict: return "predict";
        case Action::Kind::Route: return "route:" + std::to_string(a.oracle);
        case Action::Kind::Abstain: return "abstain";
    }
    return "unknown";
}

Action parse_action(const std::string& s) {
    if (s == "predict") return Action::predict();
    if (s == "abstain") return Action::abstain();
    if (s == "route") return Action::route(0);
    if (s.rfind("route:", 0) == 0) {
        try {
            return Action::route(static_cast<std::size_t>(std::stoul(s.substr(6))));
        } catch (const std::exception&) {
        }
    }
    throw InvalidInput("unknown action '" + s + "'");
}

double RoutingDecision::cost_of(const Action& a) const {
    for (const auto& ac : costs) {
        if (ac.action == a) return ac.cost;
    }
    throw InvalidInput("action " + to_string(a) + " not available");
}

RoutingDecision argmin_decision(std::vector<ActionCost> costs) {
    if (costs.empty()) throw InvalidInput("no actions to choose from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < costs.size(); ++i) {
        if (costs[i].cost < costs[best].cost) best = i;
    }
    Action chosen = costs[best].action;
    return RoutingDecision{chosen, std::move(costs)};
}

}  // namespace hocroute
