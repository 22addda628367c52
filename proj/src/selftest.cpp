#include "hocroute/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hocroute/calibrator.hpp"
#include "hocroute/numeric.hpp"
#include "hocroute/router.hpp"

namespace hocroute {

namespace {

constexpr double kSlack = 1e-9;

using Rng = std::mt19937_64;
using Vec = std::vector<double>;

Rng stream(std::uint64_t seed, std::uint64_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag)};
    return Rng(seq);
}

// Mostly uniform on the simplex, with some mass on faces and vertices.
Vec random_simplex(Rng& rng, std::size_t classes) {
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec v(classes);
    const double mode = u(rng);
    if (mode < 0.05) {
        std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
        v[pick(rng)] = 1.0;
        return v;
    }
    double sum = 0.0;
    for (double& x : v) {
        x = (mode < 0.25 && u(rng) < 0.4) ? 0.0 : expo(rng);
        sum += x;
    }
    if (sum == 0.0) {
        v[0] = 1.0;
        return v;
    }
    for (double& x : v) x /= sum;
    return v;
}

LabelDistribution dist(const Vec& v) { return LabelDistribution(v, 1e-6); }

Vec lerp(const Vec& a, const Vec& b, double t) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
}

double l1(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

std::string vec_str(const Vec& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s + ")";
}

// Smallest t in (0, 1] for which `fails(t)` still holds, assuming fails(1).
double shrink(const std::function<bool(double)>& fails) {
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (fails(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

void record(PropertyResult& r, double margin) {
    ++r.trials;
    r.worst_margin = std::max(r.worst_margin, margin);
    if (margin > 0.0) ++r.violations;
}

std::string class_tag(std::size_t c) { return std::to_string(c) + "class"; }

PropertyResult check_lipschitz(const LossSpec& loss, std::size_t classes, std::size_t trials, Rng rng) {
    PropertyResult r;
    r.name = "lipschitz/" + loss.name() + "/" + class_tag(classes);
    const double half_b = loss.bound() / 2.0;
    auto margin = [&](const Vec& p1, const Vec& p2, const LabelDistribution& q) {
        return std::abs(expected_loss(loss, dist(p1), q) - expected_loss(loss, dist(p2), q)) - half_b * l1(p1, p2) -
               kSlack;
    };
    for (std::size_t t = 0; t < trials; ++t) {
        const Vec p1 = random_simplex(rng, classes);
        const Vec p2 = random_simplex(rng, classes);
        const Vec qv = random_simplex(rng, classes);
        const LabelDistribution q = dist(qv);
        const double m = margin(p1, p2, q);
        record(r, m);
        if (m > 0.0 && !r.counterexample) {
            const double s = shrink([&](double x) { return margin(p1, lerp(p1, p2, x), q) > 0.0; });
            r.counterexample = "p1=" + vec_str(p1) + " p2=" + vec_str(lerp(p1, p2, s)) + " q=" + vec_str(qv);
        }
    }
    return r;
}

PropertyResult check_entropy_lipschitz(const LossSpec& loss, std::size_t classes, std::size_t trials, Rng rng) {
    PropertyResult r;
    r.name = "entropy_lipschitz/" + loss.name() + "/" + class_tag(classes);
    const double half_b = loss.bound() / 2.0;
    auto margin = [&](const Vec& p1, const Vec& p2) {
        return std::abs(entropy(loss, dist(p1)) - entropy(loss, dist(p2))) - half_b * l1(p1, p2) - kSlack;
    };
    for (std::size_t t = 0; t < trials; ++t) {
        const Vec p1 = random_simplex(rng, classes);
        const Vec p2 = random_simplex(rng, classes);
        const double m = margin(p1, p2);
        record(r, m);
        if (m > 0.0 && !r.counterexample) {
            const double s = shrink([&](double x) { return margin(p1, lerp(p1, p2, x)) > 0.0; });
            r.counterexample = "p1=" + vec_str(p1) + " p2=" + vec_str(lerp(p1, p2, s));
        }
    }
    return r;
}

PropertyResult check_proper(const LossSpec& loss, std::size_t classes, std::size_t trials, Rng rng) {
    PropertyResult r;
    r.name = "proper/" + loss.name() + "/" + class_tag(classes);
    auto margin = [&](const Vec& p, const Vec& q) {
        const LabelDistribution pd = dist(p);
        return expected_loss(loss, pd, pd) - expected_loss(loss, pd, dist(q)) - kSlack;
    };
    for (std::size_t t = 0; t < trials; ++t) {
        const Vec p = random_simplex(rng, classes);
        const Vec q = random_simplex(rng, classes);
        const double m = margin(p, q);
        record(r, m);
        if (m > 0.0 && !r.counterexample) {
            const double s = shrink([&](double x) { return margin(p, lerp(p, q, x)) > 0.0; });
            r.counterexample = "p=" + vec_str(p) + " q=" + vec_str(lerp(p, q, s));
        }
    }
    return r;
}

PropertyResult check_tree(std::size_t trials, Rng rng) {
    PropertyResult r;
    r.name = "tree_vs_argmin";
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t t = 0; t < trials; ++t) {
        const double il = 2.0 * u(rng);
        const double rl = 2.0 * u(rng);
        const double alpha = 2.0 * u(rng);
        const double beta = u(rng) < 0.1 ? kInfinity : 2.0 * u(rng);

        const double costs[3] = {il + rl, il + alpha, beta};
        int best = 0;
        for (int a = 1; a < 3; ++a) {
            if (costs[a] < costs[best]) best = a;
        }
        bool tie = false;
        for (int a = 0; a < 3; ++a) {
            if (a != best && std::abs(costs[a] - costs[best]) <= 1e-12) tie = true;
        }
        if (tie) {
            ++r.skipped;
            continue;
        }
        const Action expected = best == 0 ? Action::predict() : best == 1 ? Action::route(0) : Action::abstain();
        const Action got = tree_decide(il, rl, alpha, beta);
        record(r, got == expected ? -1.0 : 1.0);
        if (!(got == expected) && !r.counterexample) {
            r.counterexample = "il=" + format_double(il) + " rl=" + format_double(rl) + " alpha=" +
                               format_double(alpha) + " beta=" + format_double(beta) + " tree=" + to_string(got) +
                               " argmin=" + to_string(expected);
        }
    }
    if (r.trials > 0 && r.violations == 0) r.worst_margin = -1.0;
    return r;
}

// One random binary bin: p* values, k-label snapshot means, and a recalibrated
// constant prediction. Compares simulated action costs (snapshot means as
// truth) with true costs (exact p*) against (B/2) W1 of the two mixtures.
PropertyResult check_simulated_gap(const LossSpec& loss, std::size_t trials, Rng rng) {
    PropertyResult r;
    r.name = "simulated_gap/" + loss.name();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size_pick(1, 40);
    std::uniform_int_distribution<int> k_pick(1, 50);
    const double half_b = loss.bound() / 2.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t m = size_pick(rng);
        const int k = k_pick(rng);
        const double center = u(rng);
        const double width = u(rng);
        Vec p_star(m);
        Vec y_bar(m);
        for (std::size_t i = 0; i < m; ++i) {
            p_star[i] = std::clamp(center + width * (u(rng) - 0.5), 0.0, 1.0);
            std::binomial_distribution<int> draw(k, p_star[i]);
            y_bar[i] = static_cast<double>(draw(rng)) / k;
        }
        double centroid = 0.0;
        for (double y : y_bar) centroid += y;
        centroid /= static_cast<double>(m);
        const LabelDistribution f = dist({1.0 - centroid, centroid});

        TaggedMixture mixture;
        double true_predict = 0.0;
        double true_route = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            mixture.entries.push_back({f, dist({1.0 - y_bar[i], y_bar[i]})});
            const LabelDistribution ps = dist({1.0 - p_star[i], p_star[i]});
            true_predict += expected_loss(loss, ps, f);
            true_route += entropy(loss, ps);
        }
        true_predict /= static_cast<double>(m);
        true_route /= static_cast<double>(m);

        const double alpha = 0.05;
        const RoutingConfig config(loss, alpha, 0.5);
        const auto sim = simulated_costs(mixture, config, bayes_oracles(1));

        // Equal-size empirical measures on a line: W1 is the sorted matching.
        // In l1 on the binary simplex, distances are twice the p1 gap.
        Vec a = y_bar;
        Vec b = p_star;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        double w1 = 0.0;
        for (std::size_t i = 0; i < m; ++i) w1 += 2.0 * std::abs(a[i] - b[i]);
        w1 /= static_cast<double>(m);

        const double gap = std::max(std::abs(sim[0].cost - true_predict), std::abs(sim[1].cost - (true_route + alpha)));
        const double margin = gap - half_b * w1 - kSlack;
        record(r, margin);
        if (margin > 0.0 && !r.counterexample) {
            r.counterexample = "p_star=" + vec_str(p_star) + " y_bar=" + vec_str(y_bar);
        }
    }
    return r;
}

}  // namespace

bool LemmaReport::passed() const noexcept {
    return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed(); });
}

std::string LemmaReport::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["trials"] = trials;
    j["passed"] = passed();
    j["properties"] = nlohmann::json::array();
    for (const auto& p : properties) {
        nlohmann::json e{{"name", p.name},
                         {"trials", p.trials},
                         {"violations", p.violations},
                         {"skipped", p.skipped},
                         {"worst_margin", p.worst_margin},
                         {"passed", p.passed()}};
        if (p.counterexample) e["counterexample"] = *p.counterexample;
        j["properties"].push_back(std::move(e));
    }
    return j.dump();
}

LemmaReport run_lemma_checks(std::uint64_t seed, std::size_t trials) {
    if (trials == 0) throw InvalidInput("lemma checks need at least one trial");
    LemmaReport report;
    report.seed = seed;
    report.trials = trials;
    std::uint64_t tag = 0;
    for (const auto& loss : all_default_losses()) {
        for (std::size_t classes : {2u, 3u}) {
            if (!loss.supports(classes)) continue;
            report.properties.push_back(check_lipschitz(loss, classes, trials, stream(seed, ++tag)));
            report.properties.push_back(check_entropy_lipschitz(loss, classes, trials, stream(seed, ++tag)));
            report.properties.push_back(check_proper(loss, classes, trials, stream(seed, ++tag)));
        }
    }
    report.properties.push_back(check_tree(trials, stream(seed, ++tag)));
    const std::size_t bins = std::max<std::size_t>(1, trials / 10);
    for (const auto& loss : all_default_losses()) {
        report.properties.push_back(check_simulated_gap(loss, bins, stream(seed, ++tag)));
    }
    return report;
}

}  // namespace hocroute
