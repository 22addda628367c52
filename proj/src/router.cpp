#include "hocroute/router.hpp"

#include <cmath>
#include <random>

namespace hocroute {

OracleSpec OracleSpec::aggregated(std::size_t annotators, Aggregation rule, std::size_t mc_samples,
                                  std::uint64_t seed) {
    if (annotators < 1) throw InvalidInput("aggregated oracle needs at least one annotator");
    if (mc_samples < 1) throw InvalidInput("aggregated oracle needs at least one Monte Carlo sample");
    OracleSpec o;
    o.kind = Kind::Aggregated;
    o.annotators = annotators;
    o.rule = rule;
    o.mc_samples = mc_samples;
    o.seed = seed;
    return o;
}

std::string OracleSpec::str() const {
    if (kind == Kind::Bayes) return "bayes";
    return "aggregated:" + std::to_string(annotators) + (rule == Aggregation::MajorityVote ? ":majority" : ":mean");
}

OracleSpec OracleSpec::parse(const std::string& text) {
    if (text == "bayes") return bayes();
    const std::string prefix = "aggregated:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string rest = text.substr(prefix.size());
        const auto colon = rest.find(':');
        if (colon != std::string::npos) {
            const std::string rule = rest.substr(colon + 1);
            std::size_t k = 0;
            try {
                k = static_cast<std::size_t>(std::stoul(rest.substr(0, colon)));
            } catch (const std::exception&) {
                throw InvalidInput("bad annotator count in oracle '" + text + "'");
            }
            if (rule == "majority") return aggregated(k, Aggregation::MajorityVote);
            if (rule == "mean") return aggregated(k, Aggregation::Mean);
        }
    }
    throw InvalidInput("unknown oracle '" + text + "'");
}

std::vector<OracleSpec> bayes_oracles(std::size_t count) { return std::vector<OracleSpec>(count, OracleSpec::bayes()); }

namespace {

LabelDistribution aggregate_votes(const std::vector<std::size_t>& counts, std::size_t k,
                                  OracleSpec::Aggregation rule) {
    const std::size_t n = counts.size();
    if (rule == OracleSpec::Aggregation::MajorityVote) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < n; ++c) {
            if (counts[c] > counts[best]) best = c;
        }
        return LabelDistribution::one_hot(best, n);
    }
    std::vector<double> mean(n);
    for (std::size_t c = 0; c < n; ++c) mean[c] = static_cast<double>(counts[c]) / static_cast<double>(k);
    return LabelDistribution(std::move(mean));
}

double outcome_count(std::size_t k, std::size_t classes) {
    // C(k + classes - 1, classes - 1)
    return std::exp(std::lgamma(static_cast<double>(k + classes)) - std::lgamma(static_cast<double>(k + 1)) -
                    std::lgamma(static_cast<double>(classes)));
}

struct Enumerator {
    const OracleSpec& oracle;
    const LossSpec& loss;
    const LabelDistribution& p_star;
    std::vector<std::size_t> counts;
    double log_k_factorial = 0.0;
    double total = 0.0;

    void run(std::size_t cls, std::size_t remaining) {
        const std::size_t n = counts.size();
        if (cls + 1 == n) {
            counts[cls] = remaining;
            score();
            return;
        }
        for (std::size_t c = 0; c <= remaining; ++c) {
            counts[cls] = c;
            run(cls + 1, remaining - c);
        }
    }

    void score() {
        double log_prob = log_k_factorial;
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (counts[c] == 0) continue;
            if (p_star[c] <= 0.0) return;
            log_prob += static_cast<double>(counts[c]) * std::log(p_star[c]) -
                        std::lgamma(static_cast<double>(counts[c] + 1));
        }
        total += std::exp(log_prob) * expected_loss(loss, p_star, aggregate_votes(counts, oracle.annotators, oracle.rule));
    }
};

}  // namespace

double oracle_cost(const OracleSpec& oracle, const LossSpec& loss, const LabelDistribution& p_star) {
    if (oracle.kind == OracleSpec::Kind::Bayes) return entropy(loss, p_star);

    const std::size_t n = p_star.num_classes();
    const std::size_t k = oracle.annotators;
    if (outcome_count(k, n) <= static_cast<double>(kMaxEnumeratedOutcomes)) {
        Enumerator e{oracle, loss, p_star, std::vector<std::size_t>(n, 0)};
        e.log_k_factorial = std::lgamma(static_cast<double>(k + 1));
        e.run(0, k);
        return e.total;
    }

    std::mt19937_64 rng(oracle.seed);
    std::discrete_distribution<std::size_t> draw(p_star.probs().begin(), p_star.probs().end());
    double total = 0.0;
    std::vector<std::size_t> counts(n);
    for (std::size_t s = 0; s < oracle.mc_samples; ++s) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < k; ++i) ++counts[draw(rng)];
        total += expected_loss(loss, p_star, aggregate_votes(counts, k, oracle.rule));
    }
    return total / static_cast<double>(oracle.mc_samples);
}

namespace {

void check_oracles(const RoutingConfig& config, const std::vector<OracleSpec>& oracles) {
    if (oracles.size() != config.num_oracles()) {
        throw InvalidInput("need one routing penalty per oracle (" + std::to_string(config.num_oracles()) +
                           " penalties, " + std::to_string(oracles.size()) + " oracles)");
    }
}

}  // namespace

std::vector<ActionCost> simulated_costs(const TaggedMixture& mixture, const RoutingConfig& config,
                                        const std::vector<OracleSpec>& oracles) {
    check_oracles(config, oracles);
    const auto d = estimate_decomposition(mixture, config.loss);

    std::vector<ActionCost> costs;
    costs.reserve(oracles.size() + 2);
    costs.push_back({Action::predict(), d.irreducible + d.reducible});
    for (std::size_t i = 0; i < oracles.size(); ++i) {
        double oracle_loss = d.irreducible;
        if (oracles[i].kind != OracleSpec::Kind::Bayes) {
            oracle_loss = 0.0;
            for (const auto& e : mixture.entries) oracle_loss += oracle_cost(oracles[i], config.loss, e.snapshot_mean);
            oracle_loss /= static_cast<double>(mixture.count());
        }
        costs.push_back({Action::route(i), oracle_loss + config.route_penalties[i]});
    }
    costs.push_back({Action::abstain(), config.abstain_penalty});
    return costs;
}

std::vector<ActionCost> simulated_costs(const CalibratedRouterModel& model, const BinId& bin,
                                        const RoutingConfig& config, const std::vector<OracleSpec>& oracles) {
    return simulated_costs(model.mixture_for(bin), config, oracles);
}

RoutingDecision decide(const CalibratedRouterModel& model, const BinId& bin, const RoutingConfig& config,
                       const std::vector<OracleSpec>& oracles) {
    return argmin_decision(simulated_costs(model, bin, config, oracles));
}

Action tree_decide(double irreducible, double reducible, double alpha, double beta) {
    if (reducible >= alpha) {
        return irreducible >= beta - alpha ? Action::abstain() : Action::route(0);
    }
    return irreducible + reducible >= beta ? Action::abstain() : Action::predict();
}

std::vector<ActionCost> true_costs(const LabelDistribution& p_star, const LabelDistribution& weak,
                                   const RoutingConfig& config, const std::vector<OracleSpec>& oracles) {
    check_oracles(config, oracles);
    std::vector<ActionCost> costs;
    costs.reserve(oracles.size() + 2);
    costs.push_back({Action::predict(), expected_loss(config.loss, p_star, weak)});
    for (std::size_t i = 0; i < oracles.size(); ++i) {
        costs.push_back({Action::route(i), oracle_cost(oracles[i], config.loss, p_star) + config.route_penalties[i]});
    }
    costs.push_back({Action::abstain(), config.abstain_penalty});
    return costs;
}

double true_cost(const LabelDistribution& p_star, const LabelDistribution& weak, const Action& action,
                 const RoutingConfig& config, const std::vector<OracleSpec>& oracles) {
    switch (action.kind) {
        case Action::Kind::Predict: return expected_loss(config.loss, p_star, weak);
        case Action::Kind::Route:
            check_oracles(config, oracles);
            if (action.oracle >= oracles.size()) throw InvalidInput("oracle index out of range");
            return oracle_cost(oracles[action.oracle], config.loss, p_star) + config.route_penalties[action.oracle];
        case Action::Kind::Abstain: return config.abstain_penalty;
    }
    return kInfinity;
}

RoutingDecision pointwise_optimal(const LabelDistribution& p_star, const LabelDistribution& weak,
                                  const RoutingConfig& config, const std::vector<OracleSpec>& oracles) {
    return argmin_decision(true_costs(p_star, weak, config, oracles));
}

Router::Router(const CalibratedRouterModel& model, RoutingConfig config, std::vector<OracleSpec> oracles)
    : model_(&model), config_(std::move(config)), oracles_(std::move(oracles)) {
    config_.validate();
    check_oracles(config_, oracles_);
    for (const auto& [bin, mixture] : model.mixtures()) {
        if (!mixture.empty()) decisions_.emplace(bin, argmin_decision(simulated_costs(mixture, config_, oracles_)));
    }
    fallback_ = argmin_decision(simulated_costs(model.global_mixture(), config_, oracles_));
}

const RoutingDecision& Router::decision(const BinId& bin) const {
    const auto it = decisions_.find(bin);
    return it == decisions_.end() ? fallback_ : it->second;
}

}  // namespace hocroute
