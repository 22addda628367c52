#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hocroute/losses.hpp"
#include "hocroute/types.hpp"

namespace hocroute {

/// Bin identifier: (group, bucket). For top-class binning the group is the
/// predicted class; feature and level-set binning use group 0. The overflow
/// bin catches level sets never seen during fitting.
struct BinId {
    std::int64_t group = 0;
    std::int64_t index = 0;

    static constexpr BinId overflow() { return {-1, 0}; }
    bool is_overflow() const noexcept { return group < 0; }

    /// "<group>:<index>" or "overflow".
    std::string str() const;
    static BinId parse(const std::string& s);

    auto operator<=>(const BinId&) const = default;
};

enum class PartitionKind { TopClassQuantile, Feature1DQuantile, LevelSet };

std::string to_string(PartitionKind kind);
PartitionKind parse_partition_kind(const std::string& s);

/// What to fit: kind, bucket count and (for feature binning) the feature coordinate.
struct PartitionRequest {
    PartitionKind kind = PartitionKind::TopClassQuantile;
    std::size_t buckets = 10;
    std::size_t feature_index = 0;
};

/// Parses "topclass:<buckets>", "feature:<index>:<buckets>" or "levelset".
PartitionRequest parse_partition_request(const std::string& text);

/// Decimal places used to identify distinct prediction vectors for level-set binning.
inline constexpr double kLevelSetScale = 1e6;

/// A fitted partition of the input space. Intervals between edges are
/// half-open [lo, hi); values outside the fitted range fall into the first or
/// last bucket of their group.
class PartitionSpec {
public:
    PartitionSpec() = default;

    static PartitionSpec fit(const PartitionRequest& request, std::span<const SnapshotExample> calibration);

    /// Rebuilds a spec from persisted parts; validates edge ordering.
    static PartitionSpec from_parts(PartitionKind kind, std::size_t buckets, std::size_t num_classes,
                                    std::size_t feature_index, std::vector<std::vector<double>> edges,
                                    std::vector<std::vector<double>> level_sets);

    BinId assign(const SnapshotExample& example) const;

    /// Every bin the partition can produce, overflow excluded, in sorted order.
    std::vector<BinId> bins() const;

    PartitionKind kind() const noexcept { return kind_; }
    std::size_t buckets() const noexcept { return buckets_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t feature_index() const noexcept { return feature_index_; }
    const std::vector<std::vector<double>>& edges() const noexcept { return edges_; }
    const std::vector<std::vector<double>>& level_sets() const noexcept { return level_sets_; }

private:
    PartitionKind kind_ = PartitionKind::TopClassQuantile;
    std::size_t buckets_ = 1;
    std::size_t num_classes_ = 2;
    std::size_t feature_index_ = 0;
    // TopClass: one inner-edge list per class. Feature1D: a single list.
    std::vector<std::vector<double>> edges_;
    // LevelSet: rounded prediction vectors in first-seen order; bin index = position.
    std::vector<std::vector<double>> level_sets_;
    std::map<std::vector<double>, std::int64_t> level_index_;
};

/// Inner edges splitting `values` into `buckets` groups of equal size (+-1).
/// Each edge sits halfway between the last value of one group and the first of
/// the next. A split that falls inside a run of tied values moves to the
/// nearer end of the run, and duplicate edges are dropped.
std::vector<double> quantile_edges(std::vector<double> values, std::size_t buckets);

/// Prediction vector rounded to the level-set resolution.
std::vector<double> level_set_key(const LabelDistribution& p);

struct BinQuality {
    BinId bin;
    std::size_t count = 0;
    double quality = 0.0;  // (1/2) E|RL - mean RL|
};

struct PartitionQualityReport {
    std::vector<BinQuality> bins;
    std::vector<BinId> empty_bins;
    double aggregate = 0.0;  // count-weighted mean over non-empty bins
};

/// Excess-cost bound of the best constant two-way decision per bin versus the
/// pointwise optimum: half the mean absolute deviation of the reducible loss.
/// Reducible loss uses each example's own weak prediction and `truth` as p*.
PartitionQualityReport partition_quality(const PartitionSpec& spec, std::span<const SnapshotExample> data,
                                         const LossSpec& loss, TruthSource truth = TruthSource::SnapshotMean);

}  // namespace hocroute
