#include "hocroute/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "hocroute/numeric.hpp"

namespace hocroute {

EvaluationInputs prepare_evaluation(const CalibratedRouterModel& model, std::span<const SnapshotExample> test,
                                    TruthSource truth, PredictionMode mode) {
    EvaluationInputs in;
    in.truth.reserve(test.size());
    in.prediction.reserve(test.size());
    in.bins.reserve(test.size());
    for (const auto& ex : test) {
        const BinId bin = model.assign(ex);
        in.bins.push_back(bin);
        in.truth.push_back(ground_truth(ex, truth));
        in.prediction.push_back(mode == PredictionMode::Deployed ? model.deployed_prediction(ex, bin) : ex.weak_pred);
    }
    return in;
}

std::size_t routed_count(std::size_t grid_index, std::size_t n) {
    const std::size_t steps = kCurveGridPoints - 1;
    return (grid_index * n + steps / 2) / steps;
}

namespace {

struct LossColumns {
    std::vector<double> weak;
    std::vector<double> oracle;
};

LossColumns loss_columns(const LossSpec& loss, std::span<const LabelDistribution> truth,
                         std::span<const LabelDistribution> prediction) {
    if (truth.size() != prediction.size()) throw InvalidInput("truth and prediction sizes differ");
    LossColumns cols;
    cols.weak.reserve(truth.size());
    cols.oracle.reserve(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        cols.weak.push_back(expected_loss(loss, truth[i], prediction[i]));
        cols.oracle.push_back(entropy(loss, truth[i]));
    }
    return cols;
}

// Mean loss at every grid fraction when points are routed in `order`.
std::vector<double> curve_means(std::span<const std::size_t> order, std::span<const double> weak,
                                std::span<const double> oracle) {
    const std::size_t n = order.size();
    std::vector<double> routed(n);
    std::vector<double> kept(n);
    for (std::size_t r = 0; r < n; ++r) {
        routed[r] = oracle[order[r]];
        kept[r] = weak[order[r]];
    }
    const std::span<const double> routed_view(routed);
    const std::span<const double> kept_view(kept);
    std::vector<double> means(kCurveGridPoints);
    for (std::size_t j = 0; j < kCurveGridPoints; ++j) {
        const std::size_t m = routed_count(j, n);
        means[j] = (pairwise_sum(routed_view.first(m)) + pairwise_sum(kept_view.subspan(m))) / static_cast<double>(n);
    }
    return means;
}

std::vector<std::size_t> id_ranks(std::span<const SnapshotExample> test) {
    std::vector<std::size_t> idx(test.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return test[a].id < test[b].id; });
    std::vector<std::size_t> rank(test.size());
    for (std::size_t r = 0; r < idx.size(); ++r) rank[idx[r]] = r;
    return rank;
}

}  // namespace

RoutingCurve routing_curve(const RankedPolicy& policy, std::span<const SnapshotExample> test, const LossSpec& loss,
                           std::span<const LabelDistribution> truth, std::span<const LabelDistribution> prediction) {
    if (test.empty()) throw InvalidInput("routing curve needs a nonempty test set");
    if (truth.size() != test.size()) throw InvalidInput("need one ground-truth distribution per test example");
    const auto cols = loss_columns(loss, truth, prediction);
    const auto order = routing_order(policy, test);
    const auto means = curve_means(order, cols.weak, cols.oracle);

    RoutingCurve curve{policy.name, loss.name(), {}};
    curve.points.reserve(kCurveGridPoints);
    for (std::size_t j = 0; j < kCurveGridPoints; ++j) {
        curve.points.push_back({static_cast<double>(j) / static_cast<double>(kCurveGridPoints - 1), means[j]});
    }
    return curve;
}

std::vector<double> bootstrap_curve_difference_se(const RankedPolicy& a, const RankedPolicy& b,
                                                  std::span<const SnapshotExample> test, const LossSpec& loss,
                                                  std::span<const LabelDistribution> truth,
                                                  std::span<const LabelDistribution> prediction,
                                                  std::size_t resamples, std::uint64_t seed) {
    const std::size_t n = test.size();
    if (a.scores.size() != n || b.scores.size() != n) throw InvalidInput("policy size does not match test set");
    if (resamples < 2) throw InvalidInput("bootstrap needs at least two resamples");
    const auto cols = loss_columns(loss, truth, prediction);
    const auto rank = id_ranks(test);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::vector<double>> diffs(kCurveGridPoints);
    std::vector<std::size_t> sample(n);
    std::vector<double> weak(n);
    std::vector<double> oracle(n);
    std::vector<std::size_t> order(n);

    auto curve_for = [&](const RankedPolicy& p) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            const double sx = p.scores[sample[x]];
            const double sy = p.scores[sample[y]];
            if (sx != sy) return sx > sy;
            return rank[sample[x]] < rank[sample[y]];
        });
        return curve_means(order, weak, oracle);
    };

    for (std::size_t r = 0; r < resamples; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            sample[i] = pick(rng);
            weak[i] = cols.weak[sample[i]];
            oracle[i] = cols.oracle[sample[i]];
        }
        const auto ca = curve_for(a);
        const auto cb = curve_for(b);
        for (std::size_t j = 0; j < kCurveGridPoints; ++j) diffs[j].push_back(ca[j] - cb[j]);
    }

    std::vector<double> se(kCurveGridPoints);
    for (std::size_t j = 0; j < kCurveGridPoints; ++j) {
        // Bootstrap SE is the spread of the replicates, not of their mean.
        se[j] = standard_error(diffs[j]) * std::sqrt(static_cast<double>(resamples));
    }
    return se;
}

std::vector<double> per_example_costs(const CalibratedRouterModel& model, std::span<const SnapshotExample> test,
                                      const EvaluationInputs& inputs, const RoutingConfig& config,
                                      const std::vector<OracleSpec>& oracles, CostPolicy policy) {
    const std::size_t n = test.size();
    if (inputs.truth.size() != n || inputs.prediction.size() != n || inputs.bins.size() != n) {
        throw InvalidInput("evaluation inputs do not match the test set");
    }
    std::vector<std::vector<ActionCost>> costs;
    costs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        costs.push_back(true_costs(inputs.truth[i], inputs.prediction[i], config, oracles));
    }

    std::vector<double> out(n);
    switch (policy) {
        case CostPolicy::HocRouter: {
            const Router router(model, config, oracles);
            for (std::size_t i = 0; i < n; ++i) {
                const Action a = router.decision(inputs.bins[i]).action;
                out[i] = RoutingDecision{a, costs[i]}.cost_of(a);
            }
            break;
        }
        case CostPolicy::BucketOptimal: {
            std::map<BinId, std::vector<double>> sums;
            for (std::size_t i = 0; i < n; ++i) {
                auto& s = sums[inputs.bins[i]];
                if (s.empty()) s.assign(costs[i].size(), 0.0);
                for (std::size_t a = 0; a < costs[i].size(); ++a) s[a] += costs[i][a].cost;
            }
            std::map<BinId, std::size_t> best;
            for (const auto& [bin, s] : sums) {
                std::size_t b = 0;
                for (std::size_t a = 1; a < s.size(); ++a) {
                    if (s[a] < s[b]) b = a;
                }
                best.emplace(bin, b);
            }
            for (std::size_t i = 0; i < n; ++i) out[i] = costs[i][best.at(inputs.bins[i])].cost;
            break;
        }
        case CostPolicy::PointwiseOptimal:
            for (std::size_t i = 0; i < n; ++i) out[i] = argmin_decision(costs[i]).chosen_cost();
            break;
    }
    return out;
}

const SweepRow& CostSweep::row(double beta, const std::string& policy) const {
    for (const auto& r : rows) {
        if (r.beta == beta && r.policy == policy) return r;
    }
    throw InvalidInput("no sweep row for policy " + policy + " at beta " + format_double(beta));
}

std::vector<double> beta_grid(double lo, double hi, double step) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo < 0.0) throw InvalidInput("beta grid bounds must be finite and >= 0");
    if (!(step > 0.0)) throw InvalidInput("beta grid step must be positive");
    if (hi < lo) throw InvalidInput("beta grid upper bound is below the lower bound");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
    std::vector<double> grid;
    grid.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        grid.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return grid;
}

std::vector<double> parse_beta_grid(const std::string& text) {
    auto number = [&](const std::string& s) {
        if (s == "inf") return kInfinity;
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw InvalidInput("");
            return v;
        } catch (const std::exception&) {
            throw InvalidInput("cannot parse beta value '" + s + "'");
        }
    };
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) {
        const double v = number(text);
        if (!(v >= 0.0)) throw InvalidInput("beta must be >= 0");
        return {v};
    }
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos) throw InvalidInput("beta grid must be lo:hi:step");
    return beta_grid(number(text.substr(0, c1)), number(text.substr(c1 + 1, c2 - c1 - 1)), number(text.substr(c2 + 1)));
}

CostSweep cost_sweep(const CalibratedRouterModel& model, std::span<const SnapshotExample> test,
                     const EvaluationInputs& inputs, const LossSpec& loss, double alpha,
                     std::span<const double> betas, const std::vector<OracleSpec>& oracles) {
    const std::size_t n = test.size();
    if (n == 0) throw InvalidInput("cost sweep needs a nonempty test set");
    if (inputs.truth.size() != n || inputs.bins.size() != n) throw InvalidInput("evaluation inputs do not match the test set");
    const std::size_t k = oracles.size();
    if (k == 0) throw InvalidInput("cost sweep needs at least one oracle");

    // Loss parts that do not depend on the penalties.
    std::vector<double> predict_loss(n);
    std::vector<std::vector<double>> oracle_loss(n, std::vector<double>(k));
    for (std::size_t i = 0; i < n; ++i) {
        predict_loss[i] = expected_loss(loss, inputs.truth[i], inputs.prediction[i]);
        for (std::size_t j = 0; j < k; ++j) oracle_loss[i][j] = oracle_cost(oracles[j], loss, inputs.truth[i]);
    }

    CostSweep sweep;
    sweep.alpha = alpha;
    sweep.betas.assign(betas.begin(), betas.end());
    const std::vector<double> alphas(k, alpha);
    const std::vector<double> no_route(k, kInfinity);

    struct Variant {
        const char* name;
        RoutingConfig config;
    };
    for (double beta : betas) {
        const Variant variants[] = {{"three_way", RoutingConfig(loss, alphas, beta)},
                                    {"predict_route", RoutingConfig(loss, alphas, kInfinity)},
                                    {"predict_abstain", RoutingConfig(loss, no_route, beta)}};
        std::vector<std::vector<double>> realized;
        for (const auto& v : variants) {
            const Router router(model, v.config, oracles);
            std::vector<double> cost(n);
            std::vector<double> estimated(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& d = router.decision(inputs.bins[i]);
                estimated[i] = d.chosen_cost();
                switch (d.action.kind) {
                    case Action::Kind::Predict: cost[i] = predict_loss[i]; break;
                    case Action::Kind::Route:
                        cost[i] = oracle_loss[i][d.action.oracle] + v.config.route_penalties[d.action.oracle];
                        break;
                    case Action::Kind::Abstain: cost[i] = beta; break;
                }
            }
            sweep.rows.push_back({beta, v.name, mean(cost), mean(estimated), standard_error(cost), 0.0, 0.0});
            realized.push_back(std::move(cost));
        }
        auto& three_way = sweep.rows[sweep.rows.size() - 3];
        three_way.se_vs_predict_route = paired_standard_error(realized[0], realized[1]);
        three_way.se_vs_predict_abstain = paired_standard_error(realized[0], realized[2]);
    }
    return sweep;
}

std::vector<LossReport> multi_loss_report(const CalibratedRouterModel& model, std::span<const SnapshotExample> test,
                                          const EvaluationInputs& inputs, std::span<const LossSpec> losses,
                                          std::span<const RankedPolicy> external) {
    std::vector<LossReport> reports;
    for (const auto& loss : losses) {
        LossReport report{loss, {}, false, ""};
        if (!loss.supports(model.num_classes())) {
            report.skipped = true;
            report.warning = loss.name() + " does not support " + std::to_string(model.num_classes()) + " classes";
            reports.push_back(std::move(report));
            continue;
        }
        const auto pointwise = pointwise_optimal_scores(inputs.prediction, loss, inputs.truth);
        const RankedPolicy policies[] = {hoc_scores(test, loss, model),
                                         total_uncertainty_scores(inputs.prediction, loss),
                                         bucket_average(pointwise, inputs.bins, "bucket_optimal"), pointwise};
        for (const auto& p : policies) {
            report.curves.push_back(routing_curve(p, test, loss, inputs.truth, inputs.prediction));
        }
        for (const auto& p : external) {
            report.curves.push_back(routing_curve(p, test, loss, inputs.truth, inputs.prediction));
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

void write_curves_csv(std::ostream& out, std::span<const RoutingCurve> curves) {
    out << "# hocroute-curves v1\n";
    out << "policy,loss,fraction,mean_loss\n";
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            out << c.policy << ',' << c.loss << ',' << format_double(p.fraction) << ',' << format_double(p.mean_loss)
                << '\n';
        }
    }
}

void write_sweep_csv(std::ostream& out, const CostSweep& sweep) {
    out << "# hocroute-sweep v1\n";
    out << "alpha,beta,policy,mean_cost\n";
    for (const char* policy : {"three_way", "predict_route", "predict_abstain"}) {
        for (const auto& r : sweep.rows) {
            if (r.policy != policy) continue;
            out << format_double(sweep.alpha) << ',' << format_double(r.beta) << ',' << r.policy << ','
                << format_double(r.mean_cost) << '\n';
        }
    }
}

}  // namespace hocroute
