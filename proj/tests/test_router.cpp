#include <doctest.h>

#include <cmath>
#include <random>

#include "hocroute/router.hpp"
#include "hocroute/synthetic.hpp"
#include "oracles.hpp"

using namespace hocroute;

namespace {

// A one-entry binary mixture with IL-hat = il and RL-hat = rl under Brier:
// H(y) = 2 y0 y1 fixes the snapshot mean, and ||y - f||^2 = 2 d^2 fixes the offset.
TaggedMixture mixture_with(double il, double rl) {
    const double y1 = (1.0 + std::sqrt(1.0 - 2.0 * il)) / 2.0;
    const double d = std::sqrt(rl / 2.0);
    TaggedMixture m;
    m.entries.push_back({LabelDistribution({1.0 - y1 + d, y1 - d}), LabelDistribution({1.0 - y1, y1})});
    return m;
}

double cost_of(const std::vector<ActionCost>& costs, const Action& a) {
    for (const auto& c : costs) {
        if (c.action == a) return c.cost;
    }
    return NAN;
}

}  // namespace

TEST_CASE("simulated costs by direct substitution") {
    const auto m = mixture_with(0.2, 0.1);
    const auto d = estimate_decomposition(m, LossSpec::brier());
    REQUIRE(d.irreducible == doctest::Approx(0.2));
    REQUIRE(d.reducible == doctest::Approx(0.1));
    const RoutingConfig config(LossSpec::brier(), 0.05, 0.3);
    const auto costs = simulated_costs(m, config, bayes_oracles(1));
    REQUIRE(costs.size() == 3);
    CHECK(cost_of(costs, Action::predict()) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(cost_of(costs, Action::route(0)) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(cost_of(costs, Action::abstain()) == 0.3);
    CHECK(argmin_decision(costs).action == Action::route(0));

    const auto no_abstain = simulated_costs(m, RoutingConfig(LossSpec::brier(), 0.05, kInfinity), bayes_oracles(1));
    CHECK(std::isinf(cost_of(no_abstain, Action::abstain())));

    const auto exact = mixture_with(0.2, 0.0);
    const auto c0 = simulated_costs(exact, config, bayes_oracles(1));
    CHECK(cost_of(c0, Action::predict()) == doctest::Approx(cost_of(c0, Action::route(0)) - 0.05).epsilon(1e-12));
}

TEST_CASE("Bayes route cost is IL-hat plus alpha") {
    synthetic::SyntheticOptions opt;
    opt.test_size = 10;
    const auto data = synthetic::generate(opt);
    const auto model = calibrate(PartitionSpec::fit({PartitionKind::TopClassQuantile, 10, 0}, data.calibration),
                                 data.calibration, false);
    for (const auto& loss : all_default_losses()) {
        const RoutingConfig config(loss, 0.07, 0.4);
        for (const auto& [bin, mix] : model.mixtures()) {
            const auto d = estimate_decomposition(mix, loss);
            const auto costs = simulated_costs(model, bin, config, bayes_oracles(1));
            CHECK(cost_of(costs, Action::route(0)) == doctest::Approx(d.irreducible + 0.07).epsilon(1e-12));
            CHECK(cost_of(costs, Action::predict()) == doctest::Approx(d.total()).epsilon(1e-12));
        }
    }
}

TEST_CASE("decision examples") {
    const auto m = mixture_with(0.2, 0.1);
    CHECK(argmin_decision(simulated_costs(m, RoutingConfig(LossSpec::brier(), 0.05, 0.3), bayes_oracles(1))).action ==
          Action::route(0));
    CHECK(argmin_decision(simulated_costs(m, RoutingConfig(LossSpec::brier(), 0.05, 0.0), bayes_oracles(1))).action ==
          Action::abstain());
    // IL + RL = IL + alpha = beta exactly in binary fractions: Predict wins the tie.
    TaggedMixture tie;
    tie.entries.push_back({LabelDistribution({0.25, 0.75}), LabelDistribution({0.0, 1.0})});
    const auto tie_costs = simulated_costs(tie, RoutingConfig(LossSpec::brier(), 0.125, 0.125), bayes_oracles(1));
    REQUIRE(cost_of(tie_costs, Action::predict()) == 0.125);
    CHECK(argmin_decision(tie_costs).action == Action::predict());
    // Route and Abstain tie below Predict: Route wins.
    const auto rt = simulated_costs(tie, RoutingConfig(LossSpec::brier(), 0.0625, 0.0625), bayes_oracles(1));
    CHECK(argmin_decision(rt).action == Action::route(0));
}

TEST_CASE("tree decision examples") {
    CHECK(tree_decide(0.2, 0.1, 0.05, 0.3) == Action::route(0));
    CHECK(tree_decide(0.0, 0.0, 0.01, 0.01) == Action::predict());
    CHECK(tree_decide(0.0, 0.0, 1.0, 5.0) == Action::predict());
    CHECK(tree_decide(1.0, 0.5, 0.1, 0.2) == Action::abstain());
    CHECK(tree_decide(0.1, 0.2, 0.1, kInfinity) == Action::route(0));
    CHECK(tree_decide(0.1, 0.05, 0.1, kInfinity) == Action::predict());
}

TEST_CASE("tree decision at exact dyadic boundaries") {
    // Values are exact binary fractions, so sums are exact and the strict
    // comparisons fall exactly on the boundary.
    CHECK(tree_decide(0.25, 0.125, 0.125, 1.0) == Action::route(0));      // RL == alpha
    CHECK(tree_decide(0.25, 0.125 - 1.0 / 1024, 0.125, 1.0) == Action::predict());
    CHECK(tree_decide(0.5, 0.25, 0.125, 0.625) == Action::abstain());    // IL == beta - alpha
    CHECK(tree_decide(0.5 - 1.0 / 1024, 0.25, 0.125, 0.625) == Action::route(0));
    CHECK(tree_decide(0.25, 0.0625, 0.125, 0.3125) == Action::abstain()); // IL + RL == beta
    CHECK(tree_decide(0.25, 0.0625, 0.125, 0.3125 + 1.0 / 1024) == Action::predict());
}

TEST_CASE("tree decision matches the brute-force argmin off ties") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::size_t compared = 0;
    for (int t = 0; t < 100000; ++t) {
        const double il = u(rng), rl = u(rng), alpha = u(rng);
        const double beta = (rng() % 10 == 0) ? kInfinity : u(rng);
        const oracle::Vec costs{il + rl, il + alpha, beta};
        const auto best = oracle::argmin(costs);
        bool tie = false;
        for (std::size_t a = 0; a < 3; ++a) tie |= a != best && std::abs(costs[a] - costs[best]) <= 1e-12;
        if (tie) continue;
        ++compared;
        const Action expected = best == 0 ? Action::predict() : best == 1 ? Action::route(0) : Action::abstain();
        REQUIRE(tree_decide(il, rl, alpha, beta) == expected);
    }
    CHECK(compared > 99000);
}

TEST_CASE("pointwise optimal examples") {
    const RoutingConfig cfg(LossSpec::brier(), 0.1, kInfinity);
    const auto d = pointwise_optimal(LabelDistribution({1.0, 0.0}), LabelDistribution({0.0, 1.0}), cfg, bayes_oracles(1));
    CHECK(d.action == Action::route(0));
    CHECK(d.chosen_cost() == doctest::Approx(0.1));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double p = u(rng);
        const LabelDistribution ps({1 - p, p});
        const auto dd = pointwise_optimal(ps, ps, RoutingConfig(LossSpec::brier(), 0.01 + u(rng), u(rng)),
                                          bayes_oracles(1));
        CHECK_FALSE(dd.action.kind == Action::Kind::Route);
    }

    const auto ab = pointwise_optimal(LabelDistribution({0.5, 0.5}), LabelDistribution({0.5, 0.5}),
                                      RoutingConfig(LossSpec::brier(), 0.1, 0.0), bayes_oracles(1));
    CHECK(ab.action == Action::abstain());
}

TEST_CASE("aggregated oracle costs") {
    const auto loss = LossSpec::brier();
    const LabelDistribution ps({0.3, 0.7});
    // One annotator, majority of one vote: E ||e_y - e_y'||^2 = 2 (1 - sum p^2) = 2 H.
    CHECK(oracle_cost(OracleSpec::aggregated(1, OracleSpec::Aggregation::MajorityVote), loss, ps) ==
          doctest::Approx(2 * entropy(loss, ps)).epsilon(1e-12));
    // Mean of k votes: E L(p*, v) = H(p*) + E||v - p*||^2 = H + 2 p0 p1 / k in the binary case.
    for (std::size_t k : {1u, 2u, 5u, 40u}) {
        CHECK(oracle_cost(OracleSpec::aggregated(k, OracleSpec::Aggregation::Mean), loss, ps) ==
              doctest::Approx(entropy(loss, ps) + 2 * 0.21 / double(k)).epsilon(1e-12));
    }
    // Three-annotator majority: exact binomial sum.
    const double p1 = 0.7;
    const double maj1 = p1 * p1 * p1 + 3 * p1 * p1 * (1 - p1);
    const double expected = maj1 * expected_loss(loss, ps, LabelDistribution({0, 1})) +
                            (1 - maj1) * expected_loss(loss, ps, LabelDistribution({1, 0}));
    CHECK(oracle_cost(OracleSpec::aggregated(3, OracleSpec::Aggregation::MajorityVote), loss, ps) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(oracle_cost(OracleSpec::bayes(), loss, ps) == entropy(loss, ps));

    // Large outcome spaces go to Monte Carlo, which must be close and repeatable.
    const LabelDistribution ps3({0.2, 0.3, 0.5});
    const auto big = OracleSpec::aggregated(400, OracleSpec::Aggregation::Mean);
    const double mc = oracle_cost(big, loss, ps3);
    CHECK(mc == oracle_cost(big, loss, ps3));
    const double exact_mean = entropy(loss, ps3) + (1 - (0.04 + 0.09 + 0.25)) / 400.0;
    CHECK(mc == doctest::Approx(exact_mean).epsilon(1e-3));
}

TEST_CASE("oracle specs parse and print") {
    CHECK(OracleSpec::parse("bayes") == OracleSpec::bayes());
    const auto o = OracleSpec::parse("aggregated:5:majority");
    CHECK(o.annotators == 5);
    CHECK(OracleSpec::parse(o.str()) == o);
    CHECK_THROWS_AS(OracleSpec::parse("aggregated:x:mean"), InvalidInput);
    CHECK_THROWS_AS(OracleSpec::parse("aggregated:0:mean"), InvalidInput);
}

TEST_CASE("router caches one decision per bin and covers unseen bins") {
    synthetic::SyntheticOptions opt;
    opt.test_size = 500;
    const auto data = synthetic::generate(opt);
    const auto model = calibrate(PartitionSpec::fit({PartitionKind::TopClassQuantile, 10, 0}, data.calibration),
                                 data.calibration, true);
    const RoutingConfig config(LossSpec::cross_entropy(), std::vector<double>{0.05, 0.2}, 0.6);
    const std::vector<OracleSpec> oracles{OracleSpec::bayes(),
                                          OracleSpec::aggregated(3, OracleSpec::Aggregation::MajorityVote)};
    const Router router(model, config, oracles);
    for (const auto& ex : data.test) {
        const BinId bin = model.assign(ex);
        const auto expected = decide(model, bin, config, oracles);
        CHECK(router.route(ex).action == expected.action);
    }
    CHECK_NOTHROW(router.decision(BinId{7, 7}));
    CHECK_THROWS_AS(Router(model, config, bayes_oracles(1)), InvalidInput);
}

TEST_CASE("routing config validation") {
    CHECK_THROWS_AS(RoutingConfig(LossSpec::brier(), -0.1, 1.0), InvalidInput);
    CHECK_THROWS_AS(RoutingConfig(LossSpec::brier(), 0.1, NAN), InvalidInput);
    CHECK_THROWS_AS(RoutingConfig(LossSpec::brier(), std::vector<double>{}, 1.0), InvalidInput);
    CHECK_NOTHROW(RoutingConfig(LossSpec::brier(), kInfinity, kInfinity));
}
