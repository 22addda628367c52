#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hocroute/losses.hpp"
#include "hocroute/partition.hpp"
#include "hocroute/types.hpp"

namespace hocroute {

struct MixtureEntry {
    LabelDistribution weak_pred;
    LabelDistribution snapshot_mean;

    bool operator==(const MixtureEntry&) const = default;
};

/// Empirical distribution of (prediction, snapshot mean) pairs in one bin.
/// Entries are kept raw so any loss can be evaluated at routing time.
struct TaggedMixture {
    std::vector<MixtureEntry> entries;

    std::size_t count() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }

    bool operator==(const TaggedMixture&) const = default;
};

struct Decomposition {
    double irreducible = 0.0;
    double reducible = 0.0;

    double total() const noexcept { return irreducible + reducible; }
};

/// Bin-conditional mixtures over a fitted partition. When recalibrated, the
/// deployed prediction for every point of a bin is the bin centroid (mean
/// snapshot mean), and the stored predictions are replaced accordingly.
class CalibratedRouterModel {
public:
    static CalibratedRouterModel from_parts(PartitionSpec partition, std::map<BinId, TaggedMixture> mixtures,
                                            TaggedMixture global_mixture, bool recalibrated,
                                            std::map<BinId, LabelDistribution> centroids,
                                            std::optional<LabelDistribution> global_centroid);

    const PartitionSpec& partition() const noexcept { return partition_; }
    const std::map<BinId, TaggedMixture>& mixtures() const noexcept { return mixtures_; }
    const TaggedMixture& global_mixture() const noexcept { return global_mixture_; }
    bool recalibrated() const noexcept { return recalibrated_; }
    const std::map<BinId, LabelDistribution>& centroids() const noexcept { return centroids_; }
    const std::optional<LabelDistribution>& global_centroid() const noexcept { return global_centroid_; }
    std::size_t num_classes() const noexcept { return partition_.num_classes(); }

    BinId assign(const SnapshotExample& example) const { return partition_.assign(example); }

    /// The bin's own mixture, or the global mixture when the bin saw no data.
    const TaggedMixture& mixture_for(const BinId& bin) const;

    /// f(x) as deployed: the bin centroid when recalibrated, else the raw weak prediction.
    LabelDistribution deployed_prediction(const SnapshotExample& example) const;
    LabelDistribution deployed_prediction(const SnapshotExample& example, const BinId& bin) const;

    bool operator==(const CalibratedRouterModel& other) const;

private:
    friend CalibratedRouterModel calibrate(const PartitionSpec&, std::span<const SnapshotExample>, bool);

    PartitionSpec partition_;
    std::map<BinId, TaggedMixture> mixtures_;
    TaggedMixture global_mixture_;
    bool recalibrated_ = false;
    std::map<BinId, LabelDistribution> centroids_;
    std::optional<LabelDistribution> global_centroid_;
};

/// Bin-and-Estimate: store each calibration example's (f(x), y-bar) pair in its
/// bin, in input order; optionally replace predictions with bin centroids.
CalibratedRouterModel calibrate(const PartitionSpec& partition, std::span<const SnapshotExample> calibration,
                                bool recalibrate);

/// IL-hat = mean L(y-bar, y-bar); RL-hat = mean L(y-bar, f(x')) - IL-hat.
Decomposition estimate_decomposition(const TaggedMixture& mixture, const LossSpec& loss);
Decomposition estimate_decomposition(const CalibratedRouterModel& model, const BinId& bin, const LossSpec& loss);

/// 1-Wasserstein distance between two empirical distributions on the line.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

struct BinWasserstein {
    BinId bin;
    double distance = 0.0;
    std::size_t model_count = 0;
    std::size_t reference_count = 0;
};

/// Per-bin l1 Wasserstein distance between the stored snapshot-mean mixture
/// and the reference sample's distribution (binary labels only). Bins with no
/// reference points are omitted. With TruthSource::ExactPStar the reference
/// mixture is built from exact p* values instead of snapshot means.
std::vector<BinWasserstein> wasserstein_error(const CalibratedRouterModel& model,
                                              std::span<const SnapshotExample> reference,
                                              TruthSource reference_source = TruthSource::SnapshotMean);

}  // namespace hocroute
