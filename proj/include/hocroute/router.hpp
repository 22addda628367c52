#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hocroute/calibrator.hpp"
#include "hocroute/routing_config.hpp"

namespace hocroute {

/// An oracle whose expected loss at x is a known function c(L, p*(x)).
///
/// Bayes returns p* itself, so c(L, p*) = H(p*). Aggregated queries k
/// annotators (each label drawn from p*) and combines their votes, either as a
/// one-hot majority (lowest class wins ties) or as the vote histogram.
struct OracleSpec {
    enum class Kind { Bayes, Aggregated };
    enum class Aggregation { MajorityVote, Mean };

    Kind kind = Kind::Bayes;
    std::size_t annotators = 1;
    Aggregation rule = Aggregation::MajorityVote;
    std::size_t mc_samples = 1000;
    std::uint64_t seed = 0x5eed;

    static OracleSpec bayes() { return {}; }
    static OracleSpec aggregated(std::size_t annotators, Aggregation rule, std::size_t mc_samples = 1000,
                                 std::uint64_t seed = 0x5eed);

    /// "bayes", "aggregated:<k>:majority", "aggregated:<k>:mean".
    std::string str() const;
    static OracleSpec parse(const std::string& text);

    bool operator==(const OracleSpec&) const = default;
};

/// One Bayes oracle per routing penalty.
std::vector<OracleSpec> bayes_oracles(std::size_t count);

/// Label configurations above this count are handled by Monte Carlo instead of
/// exact multinomial enumeration.
inline constexpr std::size_t kMaxEnumeratedOutcomes = 20000;

/// c(L, p*) for the oracle.
double oracle_cost(const OracleSpec& oracle, const LossSpec& loss, const LabelDistribution& p_star);

/// Simulated routing cost of every action over a bin's mixture, in tie-break order:
/// Predict = IL + RL, Route(i) = mean c_i(L, y-bar) + alpha_i, Abstain = beta.
std::vector<ActionCost> simulated_costs(const TaggedMixture& mixture, const RoutingConfig& config,
                                        const std::vector<OracleSpec>& oracles);
std::vector<ActionCost> simulated_costs(const CalibratedRouterModel& model, const BinId& bin,
                                        const RoutingConfig& config, const std::vector<OracleSpec>& oracles);

/// Argmin of the simulated costs; constant over a bin.
RoutingDecision decide(const CalibratedRouterModel& model, const BinId& bin, const RoutingConfig& config,
                       const std::vector<OracleSpec>& oracles);

/// Closed-form decision for one Bayes oracle given irreducible and reducible loss.
Action tree_decide(double irreducible, double reducible, double alpha, double beta);

/// True cost of every action at a point with known p*.
std::vector<ActionCost> true_costs(const LabelDistribution& p_star, const LabelDistribution& weak,
                                   const RoutingConfig& config, const std::vector<OracleSpec>& oracles);

/// Cost of a single action at a point with known p*.
double true_cost(const LabelDistribution& p_star, const LabelDistribution& weak, const Action& action,
                 const RoutingConfig& config, const std::vector<OracleSpec>& oracles);

RoutingDecision pointwise_optimal(const LabelDistribution& p_star, const LabelDistribution& weak,
                                  const RoutingConfig& config, const std::vector<OracleSpec>& oracles);

/// Per-bin decisions for one configuration, computed once up front. Immutable
/// after construction, so concurrent lookups are safe.
class Router {
public:
    Router(const CalibratedRouterModel& model, RoutingConfig config, std::vector<OracleSpec> oracles);

    const RoutingDecision& decision(const BinId& bin) const;
    const RoutingDecision& route(const SnapshotExample& example) const { return decision(model_->assign(example)); }

    const RoutingConfig& config() const noexcept { return config_; }
    const CalibratedRouterModel& model() const noexcept { return *model_; }

private:
    const CalibratedRouterModel* model_;
    RoutingConfig config_;
    std::vector<OracleSpec> oracles_;
    std::map<BinId, RoutingDecision> decisions_;
    RoutingDecision fallback_;
};

}  // namespace hocroute
