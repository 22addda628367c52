#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hocroute {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* code() const noexcept { return "error"; }
};

class InvalidInput : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "invalid_input"; }
};

class UnsupportedLoss : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "unsupported_loss"; }
};

class UnsupportedDiagnostic : public Error {
public:
    using Error::Error;
    const char* code() const noexcept override { return "unsupported_diagnostic"; }
};

// ---------------------------------------------------------------------------
// LabelDistribution
// ---------------------------------------------------------------------------

/// A point of the probability simplex over a finite label set (>= 2 classes).
///
/// Construction validates the input and renormalizes it so the entries sum to
/// one. Inputs whose sum is off by more than `sum_tolerance` are rejected.
/// Sums within kRenormalizeThreshold of one are left untouched.
class LabelDistribution {
public:
    static constexpr double kSimplexTolerance = 1e-9;
    static constexpr double kDefaultSumTolerance = 1e-6;
    static constexpr double kRenormalizeThreshold = 1e-12;

    explicit LabelDistribution(std::vector<double> probs,
                               double sum_tolerance = kDefaultSumTolerance);

    static LabelDistribution one_hot(std::size_t cls, std::size_t num_classes);
    static LabelDistribution uniform(std::size_t num_classes);

    std::size_t num_classes() const noexcept { return probs_.size(); }
    double operator[](std::size_t c) const noexcept { return probs_[c]; }
    std::span<const double> probs() const noexcept { return probs_; }

    /// Class with the largest probability; ties go to the lowest index.
    std::size_t argmax() const noexcept;

    bool operator==(const LabelDistribution&) const = default;

private:
    std::vector<double> probs_;
};

double l1_distance(const LabelDistribution& a, const LabelDistribution& b);

/// Mean of several simplex points over the same class count.
LabelDistribution mean_of(std::span<const LabelDistribution> points);

// ---------------------------------------------------------------------------
// SnapshotExample
// ---------------------------------------------------------------------------

/// One calibration or test record: weak prediction f(x) plus k sampled labels.
struct SnapshotExample {
    std::string id;
    std::optional<std::vector<double>> features;
    LabelDistribution weak_pred;
    std::vector<int> labels;
    LabelDistribution snapshot_mean;
    // Exact conditional distribution, known only for synthetic data.
    std::optional<LabelDistribution> p_star;

    std::size_t num_classes() const noexcept { return weak_pred.num_classes(); }
};

/// Normalized histogram of the k one-hot labels.
LabelDistribution snapshot_mean(std::span<const int> labels, std::size_t num_classes);

/// Which distribution stands in for p*(x) when scoring against ground truth.
enum class TruthSource { SnapshotMean, ExactPStar };

/// Exact p* when requested (throws if the example carries none), else the snapshot mean.
const LabelDistribution& ground_truth(const SnapshotExample& ex, TruthSource source);

SnapshotExample make_example(std::string id, std::optional<std::vector<double>> features,
                             LabelDistribution weak_pred, std::vector<int> labels,
                             std::optional<LabelDistribution> p_star = std::nullopt);

// ---------------------------------------------------------------------------
// Actions and decisions
// ---------------------------------------------------------------------------

struct Action {
    enum class Kind { Predict, Route, Abstain };

    Kind kind = Kind::Predict;
    std::size_t oracle = 0;  // meaningful for Route only

    static Action predict() { return {Kind::Predict, 0}; }
    static Action route(std::size_t oracle = 0) { return {Kind::Route, oracle}; }
    static Action abstain() { return {Kind::Abstain, 0}; }

    bool operator==(const Action&) const = default;
};

/// "predict", "route:<i>", "abstain".
std::string to_string(const Action& a);
Action parse_action(const std::string& s);

struct ActionCost {
    Action action;
    double cost;
};

/// Chosen action plus the estimated (or true) cost of every available action.
/// `costs` is listed in tie-break priority order: Predict, Route(0..k-1), Abstain.
struct RoutingDecision {
    Action action;
    std::vector<ActionCost> costs;

    double cost_of(const Action& a) const;
    double chosen_cost() const { return cost_of(action); }
};

/// Argmin over costs given in priority order; the first minimum wins.
RoutingDecision argmin_decision(std::vector<ActionCost> costs);

}  // namespace hocroute
