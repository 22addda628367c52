#include "hocroute/calibrator.hpp"

#include <algorithm>
#include <cmath>

namespace hocroute {

namespace {

LabelDistribution centroid_of(const TaggedMixture& mixture) {
    std::vector<LabelDistribution> means;
    means.reserve(mixture.count());
    for (const auto& e : mixture.entries) means.push_back(e.snapshot_mean);
    return mean_of(means);
}

void replace_predictions(TaggedMixture& mixture, const LabelDistribution& centroid) {
    for (auto& e : mixture.entries) e.weak_pred = centroid;
}

}  // namespace

CalibratedRouterModel CalibratedRouterModel::from_parts(PartitionSpec partition,
                                                        std::map<BinId, TaggedMixture> mixtures,
                                                        TaggedMixture global_mixture, bool recalibrated,
                                                        std::map<BinId, LabelDistribution> centroids,
                                                        std::optional<LabelDistribution> global_centroid) {
    if (recalibrated && !global_centroid) throw InvalidInput("recalibrated model needs a global centroid");
    if (!recalibrated && (!centroids.empty() || global_centroid)) {
        throw InvalidInput("centroids present on a model that was not recalibrated");
    }
    CalibratedRouterModel m;
    m.partition_ = std::move(partition);
    m.mixtures_ = std::move(mixtures);
    m.global_mixture_ = std::move(global_mixture);
    m.recalibrated_ = recalibrated;
    m.centroids_ = std::move(centroids);
    m.global_centroid_ = std::move(global_centroid);
    if (m.global_mixture_.empty()) throw InvalidInput("model has an empty global mixture");
    return m;
}

const TaggedMixture& CalibratedRouterModel::mixture_for(const BinId& bin) const {
    const auto it = mixtures_.find(bin);
    if (it == mixtures_.end() || it->second.empty()) return global_mixture_;
    return it->second;
}

LabelDistribution CalibratedRouterModel::deployed_prediction(const SnapshotExample& example) const {
    return deployed_prediction(example, assign(example));
}

LabelDistribution CalibratedRouterModel::deployed_prediction(const SnapshotExample& example, const BinId& bin) const {
    if (!recalibrated_) return example.weak_pred;
    const auto it = centroids_.find(bin);
    return it != centroids_.end() ? it->second : *global_centroid_;
}

bool CalibratedRouterModel::operator==(const CalibratedRouterModel& other) const {
    return partition_.kind() == other.partition_.kind() && partition_.buckets() == other.partition_.buckets() &&
           partition_.num_classes() == other.partition_.num_classes() &&
           partition_.feature_index() == other.partition_.feature_index() &&
           partition_.edges() == other.partition_.edges() &&
           partition_.level_sets() == other.partition_.level_sets() && mixtures_ == other.mixtures_ &&
           global_mixture_ == other.global_mixture_ && recalibrated_ == other.recalibrated_ &&
           centroids_ == other.centroids_ && global_centroid_ == other.global_centroid_;
}

CalibratedRouterModel calibrate(const PartitionSpec& partition, std::span<const SnapshotExample> calibration,
                                bool recalibrate) {
    if (calibration.empty()) throw InvalidInput("calibration set is empty");

    CalibratedRouterModel model;
    model.partition_ = partition;
    model.recalibrated_ = recalibrate;
    model.global_mixture_.entries.reserve(calibration.size());
    for (const auto& ex : calibration) {
        if (ex.num_classes() != partition.num_classes()) {
            throw InvalidInput("example '" + ex.id + "' has a class count different from the partition");
        }
        MixtureEntry entry{ex.weak_pred, ex.snapshot_mean};
        model.mixtures_[partition.assign(ex)].entries.push_back(entry);
        model.global_mixture_.entries.push_back(std::move(entry));
    }

    if (recalibrate) {
        for (auto& [bin, mixture] : model.mixtures_) {
            auto centroid = centroid_of(mixture);
            replace_predictions(mixture, centroid);
            model.centroids_.emplace(bin, std::move(centroid));
        }
        model.global_centroid_ = centroid_of(model.global_mixture_);
        replace_predictions(model.global_mixture_, *model.global_centroid_);
    }
    return model;
}

Decomposition estimate_decomposition(const TaggedMixture& mixture, const LossSpec& loss) {
    if (mixture.empty()) throw InvalidInput("cannot estimate a decomposition from an empty mixture");
    double irreducible = 0.0;
    double total = 0.0;
    for (const auto& e : mixture.entries) {
        irreducible += entropy(loss, e.snapshot_mean);
        total += expected_loss(loss, e.snapshot_mean, e.weak_pred);
    }
    const double n = static_cast<double>(mixture.count());
    irreducible /= n;
    total /= n;
    return Decomposition{irreducible, total - irreducible};
}

Decomposition estimate_decomposition(const CalibratedRouterModel& model, const BinId& bin, const LossSpec& loss) {
    return estimate_decomposition(model.mixture_for(bin), loss);
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InvalidInput("Wasserstein distance needs two nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());

    // Sweep the merged support, integrating |F_a - F_b| between breakpoints.
    std::size_t ia = 0;
    std::size_t ib = 0;
    double prev = std::min(a.front(), b.front());
    double area = 0.0;
    while (ia < a.size() || ib < b.size()) {
        const double next = ib >= b.size() || (ia < a.size() && a[ia] <= b[ib]) ? a[ia] : b[ib];
        area += std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (next - prev);
        while (ia < a.size() && a[ia] == next) ++ia;
        while (ib < b.size() && b[ib] == next) ++ib;
        prev = next;
    }
    return area;
}

std::vector<BinWasserstein> wasserstein_error(const CalibratedRouterModel& model,
                                              std::span<const SnapshotExample> reference,
                                              TruthSource reference_source) {
    if (model.num_classes() != 2) {
        throw UnsupportedDiagnostic("Wasserstein calibration error is implemented for binary labels only");
    }
    std::map<BinId, std::vector<double>> ref_values;
    for (const auto& ex : reference) ref_values[model.assign(ex)].push_back(ground_truth(ex, reference_source)[1]);

    std::vector<BinWasserstein> out;
    for (auto& [bin, values] : ref_values) {
        const auto& mixture = model.mixture_for(bin);
        std::vector<double> model_values;
        model_values.reserve(mixture.count());
        for (const auto& e : mixture.entries) model_values.push_back(e.snapshot_mean[1]);
        const std::size_t n_ref = values.size();
        // On the 2-simplex the l1 distance is twice the distance between p_1 coordinates.
        out.push_back({bin, 2.0 * wasserstein_1d(std::move(model_values), std::move(values)), mixture.count(), n_ref});
    }
    return out;
}

}  // namespace hocroute
