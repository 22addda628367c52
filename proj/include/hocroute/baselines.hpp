#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hocroute/calibrator.hpp"

namespace hocroute {

/// Per-example routing priority; higher scores are routed first.
struct RankedPolicy {
    std::string name;
    std::vector<double> scores;
};

/// Deployed predictions for a test set: bin centroids when `model` is given and
/// recalibrated, raw weak predictions otherwise.
std::vector<LabelDistribution> deployed_predictions(std::span<const SnapshotExample> test,
                                                    const CalibratedRouterModel* model);

/// Score = H(f) for each charged prediction f.
RankedPolicy total_uncertainty_scores(std::span<const LabelDistribution> predictions, const LossSpec& loss);

/// Score = L(p*, f) - L(p*, p*) for each (prediction, truth) pair.
RankedPolicy pointwise_optimal_scores(std::span<const LabelDistribution> predictions, const LossSpec& loss,
                                      std::span<const LabelDistribution> p_star);

/// Replaces each pointwise score by the mean over examples sharing its bin.
RankedPolicy bucket_average(const RankedPolicy& pointwise, std::span<const BinId> bins, std::string name);

/// Score = H(f(x)) under the loss.
RankedPolicy total_uncertainty_scores(std::span<const SnapshotExample> test, const LossSpec& loss,
                                      const CalibratedRouterModel* model = nullptr);

/// Score = true reducible loss L(p*, f) - L(p*, p*) at each point.
RankedPolicy pointwise_optimal_scores(std::span<const SnapshotExample> test, const LossSpec& loss,
                                      std::span<const LabelDistribution> p_star,
                                      const CalibratedRouterModel* model = nullptr);

/// Score = mean true reducible loss of the test points sharing the bin.
RankedPolicy bucket_optimal_scores(std::span<const SnapshotExample> test, const LossSpec& loss,
                                   const CalibratedRouterModel& model, std::span<const LabelDistribution> p_star);

/// The calibrated router's ranking: estimated reducible loss of the point's bin.
RankedPolicy hoc_scores(std::span<const SnapshotExample> test, const LossSpec& loss,
                        const CalibratedRouterModel& model);

/// Uniform random priorities from a fixed seed.
RankedPolicy random_scores(std::size_t n, std::uint64_t seed);

/// Scores read from an external source keyed by example id; every test id must be present.
RankedPolicy external_scores(std::span<const SnapshotExample> test, const std::map<std::string, double>& by_id,
                             std::string name);

/// Indices sorted by descending score, ties broken by ascending example id.
std::vector<std::size_t> routing_order(const RankedPolicy& policy, std::span<const SnapshotExample> test);

}  // namespace hocroute
