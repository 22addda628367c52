#include <doctest.h>

#include <random>

#include "hocroute/calibrator.hpp"
#include "hocroute/synthetic.hpp"
#include "oracles.hpp"

using namespace hocroute;

namespace {

SnapshotExample example(const std::string& id, std::vector<double> weak, std::vector<int> labels) {
    return make_example(id, std::nullopt, LabelDistribution(std::move(weak)), std::move(labels));
}

PartitionSpec one_bin(std::span<const SnapshotExample> data) {
    return PartitionSpec::fit({PartitionKind::TopClassQuantile, 1, 0}, data);
}

}  // namespace

TEST_CASE("recalibration replaces predictions with the bin centroid") {
    const std::vector<SnapshotExample> data{example("a", {0.6, 0.4}, {0}), example("b", {0.7, 0.3}, {1})};
    const auto model = calibrate(one_bin(data), data, true);
    const BinId bin{0, 0};
    CHECK(model.centroids().at(bin) == LabelDistribution({0.5, 0.5}));
    for (const auto& e : model.mixture_for(bin).entries) CHECK(e.weak_pred == LabelDistribution({0.5, 0.5}));
    CHECK(model.deployed_prediction(data[0]) == LabelDistribution({0.5, 0.5}));
}

TEST_CASE("single example centroid equals its snapshot mean") {
    const std::vector<SnapshotExample> data{example("a", {0.6, 0.4}, {0, 0, 1, 0})};
    const auto model = calibrate(one_bin(data), data, true);
    CHECK(model.centroids().at(BinId{0, 0}) == LabelDistribution({0.75, 0.25}));
}

TEST_CASE("without recalibration the weak predictions pass through in input order") {
    const std::vector<SnapshotExample> data{example("a", {0.6, 0.4}, {0}), example("b", {0.9, 0.1}, {1}),
                                            example("c", {0.8, 0.2}, {0, 1})};
    const auto model = calibrate(one_bin(data), data, false);
    const auto& entries = model.mixture_for(BinId{0, 0}).entries;
    REQUIRE(entries.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(entries[i].weak_pred == data[i].weak_pred);
        CHECK(entries[i].snapshot_mean == data[i].snapshot_mean);
    }
    CHECK(model.deployed_prediction(data[1]) == data[1].weak_pred);
    CHECK(model.centroids().empty());
    CHECK(calibrate(one_bin(data), data, false) == model);
}

TEST_CASE("decomposition examples") {
    TaggedMixture m;
    m.entries.push_back({LabelDistribution({0.5, 0.5}), LabelDistribution({1.0, 0.0})});
    m.entries.push_back({LabelDistribution({0.5, 0.5}), LabelDistribution({0.0, 1.0})});
    const auto d = estimate_decomposition(m, LossSpec::brier());
    CHECK(d.irreducible == doctest::Approx(0.0));
    CHECK(d.reducible == doctest::Approx(0.5).epsilon(1e-15));

    TaggedMixture exact;
    exact.entries.push_back({LabelDistribution({0.3, 0.7}), LabelDistribution({0.3, 0.7})});
    exact.entries.push_back({LabelDistribution({0.6, 0.4}), LabelDistribution({0.6, 0.4})});
    CHECK(estimate_decomposition(exact, LossSpec::brier()).reducible == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    TaggedMixture perfect;
    perfect.entries.push_back({LabelDistribution({1.0, 0.0}), LabelDistribution({1.0, 0.0})});
    const auto p = estimate_decomposition(perfect, LossSpec::brier());
    CHECK(p.irreducible == 0.0);
    CHECK(p.reducible == 0.0);
}

TEST_CASE("decomposition adds up to the mixture's mean loss") {
    synthetic::SyntheticOptions opt;
    opt.test_size = 10;
    const auto data = synthetic::generate(opt);
    for (bool recal : {false, true}) {
        const auto model = calibrate(PartitionSpec::fit({PartitionKind::TopClassQuantile, 10, 0}, data.calibration),
                                     data.calibration, recal);
        for (const auto& loss : all_default_losses()) {
            for (const auto& [bin, mixture] : model.mixtures()) {
                const auto d = estimate_decomposition(model, bin, loss);
                std::vector<double> totals;
                for (const auto& e : mixture.entries) totals.push_back(expected_loss(loss, e.snapshot_mean, e.weak_pred));
                CHECK(d.total() == doctest::Approx(oracle::mean(totals)).epsilon(1e-12));
                if (recal && loss.kind == LossKind::Brier) CHECK(d.reducible >= -1e-12);
            }
        }
    }
}

TEST_CASE("the recalibrated centroid beats any constant prediction in its bin") {
    synthetic::SyntheticOptions opt;
    opt.test_size = 10;
    opt.seed = 99;
    const auto data = synthetic::generate(opt);
    const auto spec = PartitionSpec::fit({PartitionKind::TopClassQuantile, 10, 0}, data.calibration);
    const auto raw = calibrate(spec, data.calibration, false);
    const auto rec = calibrate(spec, data.calibration, true);
    std::mt19937_64 rng(3);
    for (const auto& [bin, mixture] : raw.mixtures()) {
        const auto after = estimate_decomposition(rec.mixtures().at(bin), LossSpec::brier()).total();
        oracle::Vec mean_weak(2, 0.0);
        for (const auto& e : mixture.entries) {
            for (std::size_t c = 0; c < 2; ++c) mean_weak[c] += e.weak_pred[c] / mixture.entries.size();
        }
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (oracle::Vec q : {mean_weak, oracle::Vec{0.5, 0.5}, oracle::Vec{1.0, 0.0}}) {
            const double r = u(rng);
            for (const oracle::Vec& f : {q, oracle::Vec{1.0 - r, r}}) {
                std::vector<double> costs;
                for (const auto& e : mixture.entries) {
                    const oracle::Vec ybar(e.snapshot_mean.probs().begin(), e.snapshot_mean.probs().end());
                    costs.push_back(oracle::expected(ybar, f, oracle::brier));
                }
                CHECK(after <= oracle::mean(costs) + 1e-12);
            }
        }
    }
}

TEST_CASE("empty or unseen bins fall back to the global mixture") {
    const std::vector<SnapshotExample> data{example("a", {0.2, 0.8}, {1}), example("b", {0.25, 0.75}, {0})};
    const auto spec = PartitionSpec::fit({PartitionKind::LevelSet, 1, 0}, data);
    const auto model = calibrate(spec, data, true);
    const auto stranger = example("z", {0.9, 0.1}, {0});
    CHECK(model.assign(stranger) == BinId::overflow());
    CHECK(&model.mixture_for(BinId::overflow()) == &model.global_mixture());
    CHECK(model.deployed_prediction(stranger) == LabelDistribution({0.5, 0.5}));
}

TEST_CASE("Wasserstein examples") {
    CHECK(wasserstein_1d({0.1, 0.4, 0.4}, {0.4, 0.1, 0.4}) == 0.0);
    CHECK(wasserstein_1d({0.0, 1.0}, {0.5, 0.5}) == doctest::Approx(0.5));
    CHECK(wasserstein_1d({0.2}, {0.5}) == doctest::Approx(0.3));

    // Point mass at (0.2, 0.8) against (0.5, 0.5): l1 distance 0.6.
    std::vector<SnapshotExample> cal{example("c", {0.4, 0.6}, {1, 1, 1, 1, 0, 1, 1, 1, 1, 0})};
    const auto model = calibrate(one_bin(cal), cal, false);
    auto ref = example("r", {0.4, 0.6}, {0, 1});
    auto w = wasserstein_error(model, std::vector<SnapshotExample>{ref});
    REQUIRE(w.size() == 1);
    CHECK(w[0].distance == doctest::Approx(0.6).epsilon(1e-12));

    // {0, 1} against {0.5, 0.5} on the first coordinate: 2 * 0.5.
    std::vector<SnapshotExample> cal2{example("a", {0.4, 0.6}, {1}), example("b", {0.3, 0.7}, {0})};
    const auto model2 = calibrate(one_bin(cal2), cal2, false);
    std::vector<SnapshotExample> ref2{example("r1", {0.4, 0.6}, {0, 1}), example("r2", {0.4, 0.6}, {1, 0})};
    w = wasserstein_error(model2, ref2);
    REQUIRE(w.size() == 1);
    CHECK(w[0].distance == doctest::Approx(1.0).epsilon(1e-12));

    w = wasserstein_error(model2, cal2);
    CHECK(w[0].distance == 0.0);
}

TEST_CASE("Wasserstein distance matches the CDF-area oracle") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> a(1 + rng() % 30), b(1 + rng() % 30);
        for (double& x : a) x = std::round(u(rng) * 20) / 20;
        for (double& x : b) x = u(rng);
        CHECK(wasserstein_1d(a, b) == doctest::Approx(oracle::w1_line(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("Wasserstein error is binary only") {
    std::vector<SnapshotExample> cal{example("a", {0.2, 0.3, 0.5}, {2})};
    const auto model = calibrate(one_bin(cal), cal, false);
    CHECK_THROWS_AS(wasserstein_error(model, cal), UnsupportedDiagnostic);
}
