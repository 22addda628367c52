#include <doctest.h>

#include <sstream>

#include "hocroute/evaluation.hpp"
#include "hocroute/synthetic.hpp"
#include "oracles.hpp"

using namespace hocroute;

namespace {

struct Fixture {
    synthetic::SyntheticDataset data;
    CalibratedRouterModel model;
    EvaluationInputs inputs;
};

Fixture make_fixture(bool recalibrate, std::size_t test_size = 4000) {
    synthetic::SyntheticOptions opt;
    opt.test_size = test_size;
    opt.seed = 5;
    Fixture f{synthetic::generate(opt), {}, {}};
    f.model = calibrate(PartitionSpec::fit({PartitionKind::TopClassQuantile, 10, 0}, f.data.calibration),
                        f.data.calibration, recalibrate);
    f.inputs = prepare_evaluation(f.model, f.data.test, TruthSource::ExactPStar);
    return f;
}

}  // namespace

TEST_CASE("routed counts round to the nearest integer") {
    CHECK(routed_count(0, 1000) == 0);
    CHECK(routed_count(100, 1000) == 1000);
    CHECK(routed_count(50, 7) == 4);   // 3.5 rounds up
    CHECK(routed_count(33, 10) == 3);  // 3.3
    CHECK(routed_count(37, 10) == 4);  // 3.7
}

TEST_CASE("curve endpoints equal the mean weak loss and the mean oracle entropy") {
    const auto f = make_fixture(true);
    for (const auto& loss : all_default_losses()) {
        const auto curve = routing_curve(hoc_scores(f.data.test, loss, f.model), f.data.test, loss, f.inputs.truth,
                                         f.inputs.prediction);
        REQUIRE(curve.points.size() == kCurveGridPoints);
        oracle::Vec weak, ent;
        for (std::size_t i = 0; i < f.data.test.size(); ++i) {
            weak.push_back(expected_loss(loss, f.inputs.truth[i], f.inputs.prediction[i]));
            ent.push_back(entropy(loss, f.inputs.truth[i]));
        }
        CHECK(curve.points.front().fraction == 0.0);
        CHECK(curve.points.back().fraction == 1.0);
        CHECK(std::abs(curve.points.front().mean_loss - oracle::mean(weak)) <= 1e-9);
        CHECK(std::abs(curve.points.back().mean_loss - oracle::mean(ent)) <= 1e-9);
        CHECK(curve.points.back().mean_loss <= curve.points.front().mean_loss);
        for (std::size_t j = 1; j < curve.points.size(); ++j) {
            CHECK(curve.points[j].fraction > curve.points[j - 1].fraction);
        }
    }
}

TEST_CASE("a random policy tracks the straight line between endpoints") {
    const auto f = make_fixture(false, 20000);
    const auto loss = LossSpec::brier();
    const auto curve = routing_curve(random_scores(f.data.test.size(), 17), f.data.test, loss, f.inputs.truth,
                                     f.inputs.prediction);
    const double a = curve.points.front().mean_loss;
    const double b = curve.points.back().mean_loss;
    for (const auto& p : curve.points) CHECK(std::abs(p.mean_loss - (a + (b - a) * p.fraction)) < 0.01);
}

TEST_CASE("the pointwise-optimal curve is the lower envelope") {
    const auto f = make_fixture(true);
    for (const auto& loss : all_default_losses()) {
        const auto reports = multi_loss_report(f.model, f.data.test, f.inputs, std::vector<LossSpec>{loss});
        REQUIRE(reports.size() == 1);
        const auto& curves = reports[0].curves;
        const RoutingCurve* best = nullptr;
        for (const auto& c : curves) {
            if (c.policy == "pointwise_optimal") best = &c;
        }
        REQUIRE(best != nullptr);
        for (const auto& c : curves) {
            for (std::size_t j = 0; j < kCurveGridPoints; ++j) {
                CHECK(best->points[j].mean_loss <= c.points[j].mean_loss + 1e-9);
            }
        }
    }
}

TEST_CASE("multi-loss report skips unsupported losses") {
    std::vector<SnapshotExample> data;
    for (int i = 0; i < 30; ++i) {
        data.push_back(make_example("e" + std::to_string(i), std::nullopt, LabelDistribution({0.2, 0.3, 0.5}),
                                    std::vector<int>{i % 3, (i / 3) % 3}));
    }
    const auto model = calibrate(PartitionSpec::fit({PartitionKind::TopClassQuantile, 2, 0}, data), data, false);
    const auto inputs = prepare_evaluation(model, data, TruthSource::SnapshotMean);
    const auto reports = multi_loss_report(model, data, inputs, all_default_losses());
    REQUIRE(reports.size() == 6);
    for (const auto& r : reports) {
        const bool binary_only = r.loss.kind == LossKind::WeightedFpFn || r.loss.kind == LossKind::ThreePart;
        CHECK(r.skipped == binary_only);
        CHECK(r.curves.empty() == binary_only);
        if (binary_only) CHECK_FALSE(r.warning.empty());
    }
}

TEST_CASE("beta grids") {
    CHECK(beta_grid(0.1, 0.8, 0.05).size() == 15);
    CHECK(beta_grid(0.1, 0.8, 0.05).back() == 0.8);
    CHECK(beta_grid(0.1, 0.8, 0.05)[3] == 0.25);
    CHECK(parse_beta_grid("0.1:0.8:0.05").size() == 15);
    CHECK(parse_beta_grid("0.3") == std::vector<double>{0.3});
    CHECK(std::isinf(parse_beta_grid("inf")[0]));
    CHECK(beta_grid(0.0, 1.0, 0.3).size() == 4);
    CHECK_THROWS_AS(parse_beta_grid("0.1:0.8"), InvalidInput);
    CHECK_THROWS_AS(parse_beta_grid("0.1:0.8:0"), InvalidInput);
    CHECK_THROWS_AS(parse_beta_grid("x"), InvalidInput);
}

TEST_CASE("cost sweep limits and dominance") {
    const auto f = make_fixture(true);
    const auto loss = LossSpec::brier();
    std::vector<double> betas = beta_grid(0.1, 0.8, 0.05);
    betas.push_back(0.0);
    betas.push_back(kInfinity);
    const auto sweep = cost_sweep(f.model, f.data.test, f.inputs, loss, 0.05, betas, bayes_oracles(1));
    CHECK(sweep.rows.size() == 3 * betas.size());
    for (double beta : betas) {
        const auto& three = sweep.row(beta, "three_way");
        const auto& pr = sweep.row(beta, "predict_route");
        const auto& pa = sweep.row(beta, "predict_abstain");
        CHECK(three.mean_estimated_cost <= std::min(pr.mean_estimated_cost, pa.mean_estimated_cost) + 1e-9);
        CHECK(three.mean_cost <= std::min(pr.mean_cost, pa.mean_cost) + 2 * std::max(three.se_vs_predict_route,
                                                                                      three.se_vs_predict_abstain) + 1e-9);
    }
    CHECK(sweep.row(kInfinity, "three_way").mean_cost == sweep.row(kInfinity, "predict_route").mean_cost);
    CHECK(sweep.row(0.0, "three_way").mean_cost <= 1e-12);
}

TEST_CASE("per-example policy costs are ordered") {
    const auto f = make_fixture(true);
    const RoutingConfig config(LossSpec::brier(), 0.05, 0.4);
    const auto oracles = bayes_oracles(1);
    const auto hoc = per_example_costs(f.model, f.data.test, f.inputs, config, oracles, CostPolicy::HocRouter);
    const auto bucket = per_example_costs(f.model, f.data.test, f.inputs, config, oracles, CostPolicy::BucketOptimal);
    const auto point = per_example_costs(f.model, f.data.test, f.inputs, config, oracles, CostPolicy::PointwiseOptimal);
    for (std::size_t i = 0; i < point.size(); ++i) {
        CHECK(point[i] <= hoc[i] + 1e-12);
        CHECK(point[i] <= bucket[i] + 1e-12);
    }
    CHECK(oracle::mean(bucket) <= oracle::mean(hoc) + 1e-12);
}

TEST_CASE("reports are byte-identical across runs") {
    auto render = [] {
        const auto f = make_fixture(true, 1500);
        std::ostringstream curves, sweep;
        std::vector<RoutingCurve> all;
        for (const auto& r : multi_loss_report(f.model, f.data.test, f.inputs, all_default_losses())) {
            all.insert(all.end(), r.curves.begin(), r.curves.end());
        }
        write_curves_csv(curves, all);
        const auto betas = beta_grid(0.1, 0.8, 0.05);
        write_sweep_csv(sweep, cost_sweep(f.model, f.data.test, f.inputs, LossSpec::brier(), 0.05, betas,
                                          bayes_oracles(1)));
        return curves.str() + sweep.str();
    };
    const auto first = render();
    CHECK(first == render());
    CHECK(first.rfind("# hocroute-curves v1\npolicy,loss,fraction,mean_loss\n", 0) == 0);
}

TEST_CASE("bootstrap standard errors are deterministic and vanish for identical policies") {
    const auto f = make_fixture(true, 1000);
    const auto loss = LossSpec::brier();
    const auto hoc = hoc_scores(f.data.test, loss, f.model);
    const auto tu = total_uncertainty_scores(f.inputs.prediction, loss);
    const auto se = bootstrap_curve_difference_se(hoc, tu, f.data.test, loss, f.inputs.truth, f.inputs.prediction, 10, 3);
    CHECK(se == bootstrap_curve_difference_se(hoc, tu, f.data.test, loss, f.inputs.truth, f.inputs.prediction, 10, 3));
    CHECK(se.size() == kCurveGridPoints);
    CHECK(se.front() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    const auto same = bootstrap_curve_difference_se(hoc, hoc, f.data.test, loss, f.inputs.truth, f.inputs.prediction, 10, 3);
    for (double v : same) CHECK(v == 0.0);
}
