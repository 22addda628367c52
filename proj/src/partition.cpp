#include "hocroute/partition.hpp"

#include <algorithm>
#include <cmath>

namespace hocroute {

std::string BinId::str() const {
    if (is_overflow()) return "overflow";
    return std::to_string(group) + ":" + std::to_string(index);
}

BinId BinId::parse(const std::string& s) {
    if (s == "overflow") return overflow();
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw InvalidInput("malformed bin id '" + s + "'");
    try {
        return BinId{std::stoll(s.substr(0, colon)), std::stoll(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw InvalidInput("malformed bin id '" + s + "'");
    }
}

std::string to_string(PartitionKind kind) {
    switch (kind) {
        case PartitionKind::TopClassQuantile: return "topclass";
        case PartitionKind::Feature1DQuantile: return "feature";
        case PartitionKind::LevelSet: return "levelset";
    }
    return "unknown";
}

PartitionKind parse_partition_kind(const std::string& s) {
    if (s == "topclass") return PartitionKind::TopClassQuantile;
    if (s == "feature") return PartitionKind::Feature1DQuantile;
    if (s == "levelset") return PartitionKind::LevelSet;
    throw InvalidInput("unknown partition kind '" + s + "'");
}

namespace {

std::size_t parse_count(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size() || v < 0) throw InvalidInput("");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw InvalidInput("cannot parse " + what + " from '" + s + "'");
    }
}

void check_increasing(const std::vector<double>& edges) {
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i - 1] < edges[i])) throw InvalidInput("partition edges must be strictly increasing");
    }
}

std::int64_t bucket_of(const std::vector<double>& edges, double value) {
    return static_cast<std::int64_t>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

double feature_value(const SnapshotExample& ex, std::size_t index) {
    if (!ex.features || index >= ex.features->size()) {
        throw InvalidInput("example '" + ex.id + "' lacks feature " + std::to_string(index));
    }
    return (*ex.features)[index];
}

}  // namespace

PartitionRequest parse_partition_request(const std::string& text) {
    PartitionRequest req;
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto colon = text.find(':', start);
        parts.push_back(text.substr(start, colon - start));
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    req.kind = parse_partition_kind(parts[0]);
    switch (req.kind) {
        case PartitionKind::TopClassQuantile:
            if (parts.size() != 2) throw InvalidInput("expected topclass:<buckets>");
            req.buckets = parse_count(parts[1], "bucket count");
            break;
        case PartitionKind::Feature1DQuantile:
            if (parts.size() != 3) throw InvalidInput("expected feature:<index>:<buckets>");
            req.feature_index = parse_count(parts[1], "feature index");
            req.buckets = parse_count(parts[2], "bucket count");
            break;
        case PartitionKind::LevelSet:
            if (parts.size() != 1) throw InvalidInput("levelset takes no arguments");
            req.buckets = 1;
            break;
    }
    if (req.buckets < 1) throw InvalidInput("bucket count must be >= 1");
    return req;
}

std::vector<double> quantile_edges(std::vector<double> values, std::size_t buckets) {
    std::vector<double> edges;
    if (values.empty() || buckets <= 1) return edges;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    for (std::size_t j = 1; j < buckets; ++j) {
        std::size_t split = j * n / buckets;  // number of values below the edge
        if (split == 0 || split >= n) continue;
        if (values[split - 1] == values[split]) {
            // Tied values cannot be separated; move to the nearer run boundary.
            const auto lo = static_cast<std::size_t>(
                std::lower_bound(values.begin(), values.end(), values[split]) - values.begin());
            const auto hi = static_cast<std::size_t>(
                std::upper_bound(values.begin(), values.end(), values[split]) - values.begin());
            split = (split - lo <= hi - split && lo > 0) || hi >= n ? lo : hi;
            if (split == 0 || split >= n) continue;
        }
        const double edge = values[split - 1] + (values[split] - values[split - 1]) / 2.0;
        if (edges.empty() || edge > edges.back()) edges.push_back(edge);
    }
    return edges;
}

std::vector<double> level_set_key(const LabelDistribution& p) {
    std::vector<double> key(p.num_classes());
    for (std::size_t c = 0; c < key.size(); ++c) key[c] = std::round(p[c] * kLevelSetScale) / kLevelSetScale;
    return key;
}

PartitionSpec PartitionSpec::fit(const PartitionRequest& request, std::span<const SnapshotExample> calibration) {
    if (calibration.empty()) throw InvalidInput("cannot fit a partition on an empty calibration set");
    if (request.buckets < 1) throw InvalidInput("bucket count must be >= 1");

    PartitionSpec spec;
    spec.kind_ = request.kind;
    spec.buckets_ = request.buckets;
    spec.num_classes_ = calibration.front().num_classes();
    spec.feature_index_ = request.feature_index;

    switch (request.kind) {
        case PartitionKind::TopClassQuantile: {
            std::vector<std::vector<double>> confidences(spec.num_classes_);
            for (const auto& ex : calibration) {
                if (ex.num_classes() != spec.num_classes_) throw InvalidInput("class count mismatch in calibration set");
                const std::size_t top = ex.weak_pred.argmax();
                confidences[top].push_back(ex.weak_pred[top]);
            }
            for (auto& values : confidences) spec.edges_.push_back(quantile_edges(std::move(values), request.buckets));
            break;
        }
        case PartitionKind::Feature1DQuantile: {
            std::vector<double> values;
            values.reserve(calibration.size());
            for (const auto& ex : calibration) values.push_back(feature_value(ex, request.feature_index));
            spec.edges_.push_back(quantile_edges(std::move(values), request.buckets));
            break;
        }
        case PartitionKind::LevelSet: {
            spec.buckets_ = 1;
            for (const auto& ex : calibration) {
                auto key = level_set_key(ex.weak_pred);
                if (spec.level_index_.emplace(key, static_cast<std::int64_t>(spec.level_sets_.size())).second) {
                    spec.level_sets_.push_back(std::move(key));
                }
            }
            break;
        }
    }
    return spec;
}

PartitionSpec PartitionSpec::from_parts(PartitionKind kind, std::size_t buckets, std::size_t num_classes,
                                        std::size_t feature_index, std::vector<std::vector<double>> edges,
                                        std::vector<std::vector<double>> level_sets) {
    PartitionSpec spec;
    spec.kind_ = kind;
    spec.buckets_ = buckets;
    spec.num_classes_ = num_classes;
    spec.feature_index_ = feature_index;
    if (num_classes < 2) throw InvalidInput("partition needs at least 2 classes");
    if (kind == PartitionKind::TopClassQuantile && edges.size() != num_classes) {
        throw InvalidInput("top-class partition needs one edge list per class");
    }
    if (kind == PartitionKind::Feature1DQuantile && edges.size() != 1) {
        throw InvalidInput("feature partition needs exactly one edge list");
    }
    for (const auto& e : edges) check_increasing(e);
    spec.edges_ = std::move(edges);
    for (auto& key : level_sets) {
        if (key.size() != num_classes) throw InvalidInput("level-set key has wrong class count");
        if (!spec.level_index_.emplace(key, static_cast<std::int64_t>(spec.level_sets_.size())).second) {
            throw InvalidInput("duplicate level-set key");
        }
        spec.level_sets_.push_back(std::move(key));
    }
    return spec;
}

BinId PartitionSpec::assign(const SnapshotExample& example) const {
    if (example.num_classes() != num_classes_) throw InvalidInput("example class count does not match partition");
    switch (kind_) {
        case PartitionKind::TopClassQuantile: {
            const std::size_t top = example.weak_pred.argmax();
            return BinId{static_cast<std::int64_t>(top), bucket_of(edges_[top], example.weak_pred[top])};
        }
        case PartitionKind::Feature1DQuantile:
            return BinId{0, bucket_of(edges_[0], feature_value(example, feature_index_))};
        case PartitionKind::LevelSet: {
            const auto it = level_index_.find(level_set_key(example.weak_pred));
            return it == level_index_.end() ? BinId::overflow() : BinId{0, it->second};
        }
    }
    return BinId::overflow();
}

std::vector<BinId> PartitionSpec::bins() const {
    std::vector<BinId> out;
    switch (kind_) {
        case PartitionKind::TopClassQuantile:
            for (std::size_t c = 0; c < edges_.size(); ++c) {
                for (std::size_t i = 0; i <= edges_[c].size(); ++i) {
                    out.push_back({static_cast<std::int64_t>(c), static_cast<std::int64_t>(i)});
                }
            }
            break;
        case PartitionKind::Feature1DQuantile:
            for (std::size_t i = 0; i <= edges_[0].size(); ++i) out.push_back({0, static_cast<std::int64_t>(i)});
            break;
        case PartitionKind::LevelSet:
            for (std::size_t i = 0; i < level_sets_.size(); ++i) out.push_back({0, static_cast<std::int64_t>(i)});
            break;
    }
    return out;
}

PartitionQualityReport partition_quality(const PartitionSpec& spec, std::span<const SnapshotExample> data,
                                         const LossSpec& loss, TruthSource truth) {
    std::map<BinId, std::vector<double>> reducible;
    for (const auto& ex : data) {
        const auto& p_star = ground_truth(ex, truth);
        const double rl = expected_loss(loss, p_star, ex.weak_pred) - entropy(loss, p_star);
        reducible[spec.assign(ex)].push_back(rl);
    }

    PartitionQualityReport report;
    for (const auto& bin : spec.bins()) {
        if (!reducible.contains(bin)) report.empty_bins.push_back(bin);
    }
    double weighted = 0.0;
    std::size_t total = 0;
    for (const auto& [bin, values] : reducible) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double mad = 0.0;
        for (double v : values) mad += std::abs(v - mean);
        mad /= static_cast<double>(values.size());
        report.bins.push_back({bin, values.size(), 0.5 * mad});
        weighted += 0.5 * mad * static_cast<double>(values.size());
        total += values.size();
    }
    report.aggregate = total > 0 ? weighted / static_cast<double>(total) : 0.0;
    return report;
}

}  // namespace hocroute
