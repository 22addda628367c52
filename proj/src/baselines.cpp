#include "hocroute/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hocroute {

namespace {

void check_finite(const RankedPolicy& policy) {
    for (double s : policy.scores) {
        if (!std::isfinite(s)) throw InvalidInput("policy '" + policy.name + "' produced a non-finite score");
    }
}

void check_truth(std::span<const SnapshotExample> test, std::span<const LabelDistribution> p_star) {
    if (p_star.size() != test.size()) throw InvalidInput("need one ground-truth distribution per test example");
}

}  // namespace

std::vector<LabelDistribution> deployed_predictions(std::span<const SnapshotExample> test,
                                                    const CalibratedRouterModel* model) {
    std::vector<LabelDistribution> out;
    out.reserve(test.size());
    for (const auto& ex : test) out.push_back(model ? model->deployed_prediction(ex) : ex.weak_pred);
    return out;
}

RankedPolicy total_uncertainty_scores(std::span<const LabelDistribution> predictions, const LossSpec& loss) {
    RankedPolicy policy{"total_uncertainty", {}};
    policy.scores.reserve(predictions.size());
    for (const auto& f : predictions) policy.scores.push_back(entropy(loss, f));
    check_finite(policy);
    return policy;
}

RankedPolicy pointwise_optimal_scores(std::span<const LabelDistribution> predictions, const LossSpec& loss,
                                      std::span<const LabelDistribution> p_star) {
    if (p_star.size() != predictions.size()) throw InvalidInput("need one ground-truth distribution per prediction");
    RankedPolicy policy{"pointwise_optimal", {}};
    policy.scores.reserve(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        policy.scores.push_back(expected_loss(loss, p_star[i], predictions[i]) - entropy(loss, p_star[i]));
    }
    check_finite(policy);
    return policy;
}

RankedPolicy bucket_average(const RankedPolicy& pointwise, std::span<const BinId> bins, std::string name) {
    if (bins.size() != pointwise.scores.size()) throw InvalidInput("need one bin per score");
    std::map<BinId, std::pair<double, std::size_t>> sums;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        auto& s = sums[bins[i]];
        s.first += pointwise.scores[i];
        ++s.second;
    }
    RankedPolicy policy{std::move(name), {}};
    policy.scores.reserve(bins.size());
    for (const auto& bin : bins) {
        const auto& s = sums.at(bin);
        policy.scores.push_back(s.first / static_cast<double>(s.second));
    }
    return policy;
}

RankedPolicy total_uncertainty_scores(std::span<const SnapshotExample> test, const LossSpec& loss,
                                      const CalibratedRouterModel* model) {
    return total_uncertainty_scores(deployed_predictions(test, model), loss);
}

RankedPolicy pointwise_optimal_scores(std::span<const SnapshotExample> test, const LossSpec& loss,
                                      std::span<const LabelDistribution> p_star, const CalibratedRouterModel* model) {
    check_truth(test, p_star);
    return pointwise_optimal_scores(deployed_predictions(test, model), loss, p_star);
}

RankedPolicy bucket_optimal_scores(std::span<const SnapshotExample> test, const LossSpec& loss,
                                   const CalibratedRouterModel& model, std::span<const LabelDistribution> p_star) {
    check_truth(test, p_star);
    std::vector<BinId> bins;
    bins.reserve(test.size());
    for (const auto& ex : test) bins.push_back(model.assign(ex));
    return bucket_average(pointwise_optimal_scores(test, loss, p_star, &model), bins, "bucket_optimal");
}

RankedPolicy hoc_scores(std::span<const SnapshotExample> test, const LossSpec& loss,
                        const CalibratedRouterModel& model) {
    std::map<BinId, double> cache;
    RankedPolicy policy{"hoc", {}};
    policy.scores.reserve(test.size());
    for (const auto& ex : test) {
        const BinId bin = model.assign(ex);
        auto it = cache.find(bin);
        if (it == cache.end()) it = cache.emplace(bin, estimate_decomposition(model, bin, loss).reducible).first;
        policy.scores.push_back(it->second);
    }
    check_finite(policy);
    return policy;
}

RankedPolicy random_scores(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RankedPolicy policy{"random", {}};
    policy.scores.resize(n);
    for (double& s : policy.scores) s = u(rng);
    return policy;
}

RankedPolicy external_scores(std::span<const SnapshotExample> test, const std::map<std::string, double>& by_id,
                             std::string name) {
    RankedPolicy policy{std::move(name), {}};
    policy.scores.reserve(test.size());
    for (const auto& ex : test) {
        const auto it = by_id.find(ex.id);
        if (it == by_id.end()) throw InvalidInput("external scores lack an entry for id '" + ex.id + "'");
        policy.scores.push_back(it->second);
    }
    check_finite(policy);
    return policy;
}

std::vector<std::size_t> routing_order(const RankedPolicy& policy, std::span<const SnapshotExample> test) {
    if (policy.scores.size() != test.size()) {
        throw InvalidInput("policy '" + policy.name + "' has " + std::to_string(policy.scores.size()) +
                           " scores for " + std::to_string(test.size()) + " examples");
    }
    std::vector<std::size_t> order(test.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (policy.scores[a] != policy.scores[b]) return policy.scores[a] > policy.scores[b];
        return test[a].id < test[b].id;
    });
    return order;
}

}  // namespace hocroute
