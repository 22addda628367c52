#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hocroute/baselines.hpp"
#include "hocroute/calibrator.hpp"
#include "hocroute/router.hpp"

namespace hocroute {

/// Which prediction is charged when a point is not routed: the deployed one
/// (bin centroid for recalibrated models) or the raw weak prediction.
enum class PredictionMode { Deployed, Raw };

inline constexpr std::size_t kCurveGridPoints = 101;

/// Ground truth and charged prediction for every test example.
struct EvaluationInputs {
    std::vector<LabelDistribution> truth;
    std::vector<LabelDistribution> prediction;
    std::vector<BinId> bins;
};

EvaluationInputs prepare_evaluation(const CalibratedRouterModel& model, std::span<const SnapshotExample> test,
                                    TruthSource truth, PredictionMode mode = PredictionMode::Deployed);

struct CurvePoint {
    double fraction = 0.0;
    double mean_loss = 0.0;
};

/// Mean loss against routed fraction. A routed point costs H(p*), an unrouted
/// one L(p*, f(x)); routing penalties are not included.
struct RoutingCurve {
    std::string policy;
    std::string loss;
    std::vector<CurvePoint> points;
};

/// Number of points routed at grid index j (0..100): round(j * n / 100).
std::size_t routed_count(std::size_t grid_index, std::size_t n);

RoutingCurve routing_curve(const RankedPolicy& policy, std::span<const SnapshotExample> test, const LossSpec& loss,
                           std::span<const LabelDistribution> truth, std::span<const LabelDistribution> prediction);

/// Bootstrap standard error, per grid point, of curve(a) - curve(b).
std::vector<double> bootstrap_curve_difference_se(const RankedPolicy& a, const RankedPolicy& b,
                                                  std::span<const SnapshotExample> test, const LossSpec& loss,
                                                  std::span<const LabelDistribution> truth,
                                                  std::span<const LabelDistribution> prediction,
                                                  std::size_t resamples, std::uint64_t seed);

/// Constant-per-bin or pointwise action policies scored by true cost.
enum class CostPolicy { HocRouter, BucketOptimal, PointwiseOptimal };

/// True cost Cost(x, a; T) of the action each policy picks, per test example.
std::vector<double> per_example_costs(const CalibratedRouterModel& model, std::span<const SnapshotExample> test,
                                      const EvaluationInputs& inputs, const RoutingConfig& config,
                                      const std::vector<OracleSpec>& oracles, CostPolicy policy);

struct SweepRow {
    double beta = 0.0;
    std::string policy;  // three_way, predict_route, predict_abstain
    double mean_cost = 0.0;
    double mean_estimated_cost = 0.0;
    double std_error = 0.0;
    // For three_way rows: paired standard errors of (three_way - other) per example.
    double se_vs_predict_route = 0.0;
    double se_vs_predict_abstain = 0.0;
};

struct CostSweep {
    double alpha = 0.0;
    std::vector<double> betas;
    std::vector<SweepRow> rows;

    const SweepRow& row(double beta, const std::string& policy) const;
};

/// Inclusive grid lo, lo + step, ..., with the endpoint kept when within half a step.
std::vector<double> beta_grid(double lo, double hi, double step);

/// Parses "lo:hi:step", a single value, or "inf".
std::vector<double> parse_beta_grid(const std::string& text);

/// Mean true cost per beta of the three-way router and its two restrictions
/// (beta = inf: predict/route; alpha = inf: predict/abstain).
CostSweep cost_sweep(const CalibratedRouterModel& model, std::span<const SnapshotExample> test,
                     const EvaluationInputs& inputs, const LossSpec& loss, double alpha,
                     std::span<const double> betas, const std::vector<OracleSpec>& oracles);

struct LossReport {
    LossSpec loss;
    std::vector<RoutingCurve> curves;
    bool skipped = false;
    std::string warning;
};

/// Routing curves for every loss from one calibrated model: hoc, total
/// uncertainty, bucket-optimal, pointwise-optimal and any external policies.
std::vector<LossReport> multi_loss_report(const CalibratedRouterModel& model, std::span<const SnapshotExample> test,
                                          const EvaluationInputs& inputs, std::span<const LossSpec> losses,
                                          std::span<const RankedPolicy> external = {});

void write_curves_csv(std::ostream& out, std::span<const RoutingCurve> curves);
void write_sweep_csv(std::ostream& out, const CostSweep& sweep);

}  // namespace hocroute
