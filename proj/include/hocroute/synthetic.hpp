#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hocroute/types.hpp"

namespace hocroute::synthetic {

/// Closed-form P(y = 1 | x) targets over a standard-normal scalar input.
enum class GroundTruthKind { Sinusoidal, ThreeSteps, Piecewise };

std::string to_string(GroundTruthKind kind);
GroundTruthKind parse_ground_truth_kind(const std::string& s);

/// Intermediate terms of the sinusoidal target:
///   w = 0.2 ln(1 + exp((|x| - 1) / 0.2))
///   v = sgn(x) (120 |x| - 112 w - 0.0635), sgn(0) = 0
///   u = 0.6 cos(v) + 0.4 cos(4.2 x)
struct SinusoidTerms {
    double u = 0.0;
    double v = 0.0;
    double w = 0.0;
};

SinusoidTerms sinusoid_terms(double x);

/// p*(x) = P(y = 1 | x).
double eval_ground_truth(GroundTruthKind kind, double x);

struct TrainPoint {
    double x = 0.0;
    int y = 0;
};

/// Binned-frequency weak model: equal-mass cells over x, add-one smoothed
/// positive rate per cell, clamped to [0.01, 0.99].
class WeakPredictor {
public:
    WeakPredictor() = default;
    WeakPredictor(std::vector<double> edges, std::vector<double> positive_rates);

    LabelDistribution predict(double x) const;

    const std::vector<double>& edges() const noexcept { return edges_; }
    const std::vector<double>& positive_rates() const noexcept { return rates_; }

private:
    std::vector<double> edges_;
    std::vector<double> rates_;
};

WeakPredictor fit_weak_predictor(std::span<const TrainPoint> train, std::size_t bins);

struct SyntheticOptions {
    GroundTruthKind kind = GroundTruthKind::Sinusoidal;
    std::size_t train_size = 10000;
    std::size_t calibration_size = 5000;
    std::size_t test_size = 100000;
    std::size_t k = 100;         // labels per calibration example
    std::size_t test_k = 100;    // labels per test example
    std::size_t weak_bins = 50;
    std::uint64_t seed = 1;
};

/// Train, calibration and test splits. Each split draws from its own RNG
/// stream, seeded by (seed, split tag) through std::seed_seq, so changing one
/// split's size never perturbs another. Calibration and test records carry the
/// fitted weak model's predictions and x as their single feature; test records
/// also carry the exact p*.
struct SyntheticDataset {
    std::vector<TrainPoint> train;
    std::vector<SnapshotExample> calibration;
    std::vector<SnapshotExample> test;
    std::uint64_t seed = 0;
    WeakPredictor weak;
};

SyntheticDataset generate(const SyntheticOptions& options);

}  // namespace hocroute::synthetic
