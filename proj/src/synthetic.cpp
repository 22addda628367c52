#include "hocroute/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hocroute/partition.hpp"

namespace hocroute::synthetic {

std::string to_string(GroundTruthKind kind) {
    switch (kind) {
        case GroundTruthKind::Sinusoidal: return "sinusoidal";
        case GroundTruthKind::ThreeSteps: return "three_steps";
        case GroundTruthKind::Piecewise: return "piecewise";
    }
    return "unknown";
}

GroundTruthKind parse_ground_truth_kind(const std::string& s) {
    if (s == "sinusoidal") return GroundTruthKind::Sinusoidal;
    if (s == "three_steps") return GroundTruthKind::ThreeSteps;
    if (s == "piecewise") return GroundTruthKind::Piecewise;
    throw InvalidInput("unknown ground-truth function '" + s + "'");
}

SinusoidTerms sinusoid_terms(double x) {
    SinusoidTerms t;
    const double ax = std::abs(x);
    // log1p(exp(z)) overflows for large z; it equals z + log1p(exp(-z)).
    const double z = (ax - 1.0) / 0.2;
    t.w = 0.2 * (z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
    const double sgn = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    t.v = sgn * (120.0 * ax - 112.0 * t.w - 0.0635);
    t.u = 0.6 * std::cos(t.v) + 0.4 * std::cos(4.2 * x);
    return t;
}

double eval_ground_truth(GroundTruthKind kind, double x) {
    switch (kind) {
        case GroundTruthKind::Sinusoidal: return (0.98 * sinusoid_terms(x).u + 1.0) / 2.0;
        case GroundTruthKind::ThreeSteps:
            if (x <= -1.0) return 0.0;
            if (x < 1.0) return std::sin(100.0 * x) / 2.0 + 0.5;
            return 1.0;
        case GroundTruthKind::Piecewise:
            if (x <= -1.0) return 0.5;
            if (x <= -0.5) return std::sin(100.0 * x) / 4.0 + 0.5;
            if (x <= 0.0) return 0.25;
            if (x <= 0.5) return std::sin(100.0 * x) / 4.0 + 0.5;
            return std::sin(100.0 * x) / 4.0 + 0.25;
    }
    return 0.0;
}

WeakPredictor::WeakPredictor(std::vector<double> edges, std::vector<double> positive_rates)
    : edges_(std::move(edges)), rates_(std::move(positive_rates)) {
    if (rates_.size() != edges_.size() + 1) throw InvalidInput("weak predictor needs one rate per cell");
}

LabelDistribution WeakPredictor::predict(double x) const {
    const auto cell = static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), x) - edges_.begin());
    const double q = rates_.at(cell);
    return LabelDistribution({1.0 - q, q});
}

WeakPredictor fit_weak_predictor(std::span<const TrainPoint> train, std::size_t bins) {
    if (train.empty()) throw InvalidInput("weak predictor needs training data");
    if (bins < 1) throw InvalidInput("weak predictor needs at least one bin");
    std::vector<double> xs;
    xs.reserve(train.size());
    for (const auto& p : train) xs.push_back(p.x);
    auto edges = quantile_edges(xs, bins);

    std::vector<double> positives(edges.size() + 1, 0.0);
    std::vector<double> counts(edges.size() + 1, 0.0);
    for (const auto& p : train) {
        const auto cell = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), p.x) - edges.begin());
        counts[cell] += 1.0;
        positives[cell] += p.y == 1 ? 1.0 : 0.0;
    }
    std::vector<double> rates(counts.size());
    for (std::size_t c = 0; c < rates.size(); ++c) {
        rates[c] = std::clamp((positives[c] + 1.0) / (counts[c] + 2.0), 0.01, 0.99);
    }
    return WeakPredictor(std::move(edges), std::move(rates));
}

namespace {

enum class Split : std::uint32_t { Train = 1, Calibration = 2, Test = 3 };

std::mt19937_64 stream_for(std::uint64_t seed, Split split) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(split)};
    return std::mt19937_64(seq);
}

std::string padded_id(const std::string& prefix, std::size_t i, std::size_t n) {
    std::string digits = std::to_string(i);
    const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

std::vector<SnapshotExample> draw_snapshots(GroundTruthKind kind, std::size_t n, std::size_t k,
                                            const WeakPredictor& weak, std::mt19937_64 rng,
                                            const std::string& prefix, bool attach_p_star) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<SnapshotExample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = normal(rng);
        const double p = eval_ground_truth(kind, x);
        std::bernoulli_distribution label(p);
        std::vector<int> labels(k);
        for (auto& y : labels) y = label(rng) ? 1 : 0;
        std::optional<LabelDistribution> p_star;
        if (attach_p_star) p_star = LabelDistribution({1.0 - p, p});
        out.push_back(make_example(padded_id(prefix, i, n), std::vector<double>{x}, weak.predict(x),
                                   std::move(labels), std::move(p_star)));
    }
    return out;
}

}  // namespace

SyntheticDataset generate(const SyntheticOptions& options) {
    if (options.train_size < 1 || options.calibration_size < 1 || options.test_size < 1) {
        throw InvalidInput("synthetic split sizes must be >= 1");
    }
    if (options.k < 1 || options.test_k < 1) throw InvalidInput("snapshot size k must be >= 1");

    SyntheticDataset ds;
    ds.seed = options.seed;

    auto train_rng = stream_for(options.seed, Split::Train);
    std::normal_distribution<double> normal(0.0, 1.0);
    ds.train.reserve(options.train_size);
    for (std::size_t i = 0; i < options.train_size; ++i) {
        const double x = normal(train_rng);
        std::bernoulli_distribution label(eval_ground_truth(options.kind, x));
        ds.train.push_back({x, label(train_rng) ? 1 : 0});
    }
    ds.weak = fit_weak_predictor(ds.train, options.weak_bins);

    ds.calibration = draw_snapshots(options.kind, options.calibration_size, options.k, ds.weak,
                                    stream_for(options.seed, Split::Calibration), "cal-", false);
    ds.test = draw_snapshots(options.kind, options.test_size, options.test_k, ds.weak,
                             stream_for(options.seed, Split::Test), "test-", true);
    return ds;
}

}  // namespace hocroute::synthetic
