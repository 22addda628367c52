#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hocroute/types.hpp"

namespace hocroute {

enum class LossKind { Brier, CrossEntropy, Classification, WeightedFpFn, ThreePart, AsymmetricClassPenalty };

/// A bounded proper loss. Kinds with a decision step (classification-style
/// losses) compute the decision from the prediction before scoring, which is
/// what keeps them proper.
struct LossSpec {
    LossKind kind = LossKind::Brier;
    double c_fp = 1.0;       // WeightedFpFn
    double c_fn = 1.0;       // WeightedFpFn
    double gamma = 2.0;      // AsymmetricClassPenalty
    double epsilon = 1e-6;   // CrossEntropy probability floor

    static LossSpec brier() { return {LossKind::Brier}; }
    static LossSpec cross_entropy(double eps = 1e-6);
    static LossSpec classification() { return {LossKind::Classification}; }
    static LossSpec weighted_fp_fn(double c_fp, double c_fn);
    static LossSpec three_part() { return {LossKind::ThreePart}; }
    static LossSpec asymmetric_class_penalty(double gamma);

    /// Upper end B of the loss range [0, B].
    double bound() const;

    /// Short stable name: brier, crossentropy, classification, weighted_fpfn,
    /// three_part, asymmetric.
    std::string name() const;

    bool supports(std::size_t num_classes) const;

    /// Throws InvalidInput on bad parameters.
    void validate() const;

    bool operator==(const LossSpec&) const = default;
};

/// All six kinds with default parameters.
std::vector<LossSpec> all_default_losses();

/// Parses "brier", "crossentropy[:eps]", "classification", "weighted_fpfn[:cfp,cfn]",
/// "three_part", "asymmetric[:gamma]".
LossSpec parse_loss(const std::string& text);

/// l(y, p) for a realized class y.
double pointwise_loss(const LossSpec& spec, std::size_t y, const LabelDistribution& p);

/// The vector (l(0, p), ..., l(C-1, p)).
std::vector<double> loss_vector(const LossSpec& spec, const LabelDistribution& p);

/// L(p*, p) = E_{y ~ p*} l(y, p).
double expected_loss(const LossSpec& spec, const LabelDistribution& p_star, const LabelDistribution& p);

/// H(p) = L(p, p).
double entropy(const LossSpec& spec, const LabelDistribution& p);

/// Probabilities actually scored by the cross-entropy loss: every entry is
/// floored at eps and the unfloored mass is rescaled so the result sums to 1.
/// For two classes this is plain clamping to [eps, 1 - eps].
std::vector<double> clamped_probabilities(const LabelDistribution& p, double eps);

}  // namespace hocroute
