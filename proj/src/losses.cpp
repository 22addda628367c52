#include "hocroute/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hocroute {

namespace {

void require_binary(const LossSpec& spec, std::size_t num_classes) {
    if (num_classes != 2) {
        throw UnsupportedLoss(spec.name() + " is defined for binary labels only, got " +
                              std::to_string(num_classes) + " classes");
    }
}

double parse_number(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw InvalidInput("");
        return v;
    } catch (const std::exception&) {
        throw InvalidInput("cannot parse " + what + " from '" + s + "'");
    }
}

}  // namespace

LossSpec LossSpec::cross_entropy(double eps) {
    LossSpec s{LossKind::CrossEntropy};
    s.epsilon = eps;
    s.validate();
    return s;
}

LossSpec LossSpec::weighted_fp_fn(double c_fp, double c_fn) {
    LossSpec s{LossKind::WeightedFpFn};
    s.c_fp = c_fp;
    s.c_fn = c_fn;
    s.validate();
    return s;
}

LossSpec LossSpec::asymmetric_class_penalty(double gamma) {
    LossSpec s{LossKind::AsymmetricClassPenalty};
    s.gamma = gamma;
    s.validate();
    return s;
}

double LossSpec::bound() const {
    switch (kind) {
        case LossKind::Brier: return 2.0;
        case LossKind::CrossEntropy: return std::log(1.0 / epsilon);
        case LossKind::Classification: return 1.0;
        case LossKind::WeightedFpFn: return std::max(c_fp, c_fn);
        case LossKind::ThreePart: return 4.0;
        case LossKind::AsymmetricClassPenalty: return std::max(gamma, 1.0);
    }
    return 0.0;
}

std::string LossSpec::name() const {
    switch (kind) {
        case LossKind::Brier: return "brier";
        case LossKind::CrossEntropy: return "crossentropy";
        case LossKind::Classification: return "classification";
        case LossKind::WeightedFpFn: return "weighted_fpfn";
        case LossKind::ThreePart: return "three_part";
        case LossKind::AsymmetricClassPenalty: return "asymmetric";
    }
    return "unknown";
}

bool LossSpec::supports(std::size_t num_classes) const {
    if (num_classes < 2) return false;
    if (kind == LossKind::WeightedFpFn || kind == LossKind::ThreePart) return num_classes == 2;
    if (kind == LossKind::CrossEntropy) return epsilon * static_cast<double>(num_classes) < 1.0;
    return true;
}

void LossSpec::validate() const {
    switch (kind) {
        case LossKind::CrossEntropy:
            if (!(epsilon > 0.0 && epsilon < 0.5)) {
                throw InvalidInput("cross-entropy epsilon must lie in (0, 0.5)");
            }
            break;
        case LossKind::WeightedFpFn:
            if (!(c_fp > 0.0 && c_fn > 0.0) || !std::isfinite(c_fp) || !std::isfinite(c_fn)) {
                throw InvalidInput("weighted_fpfn costs must be positive and finite");
            }
            break;
        case LossKind::AsymmetricClassPenalty:
            if (!(gamma > 0.0) || !std::isfinite(gamma)) {
                throw InvalidInput("asymmetric gamma must be positive and finite");
            }
            break;
        default: break;
    }
}

std::vector<LossSpec> all_default_losses() {
    return {LossSpec::brier(),
            LossSpec::cross_entropy(),
            LossSpec::classification(),
            LossSpec::weighted_fp_fn(1.0, 3.0),
            LossSpec::three_part(),
            LossSpec::asymmetric_class_penalty(2.0)};
}

LossSpec parse_loss(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);

    if (head == "brier" && args.empty()) return LossSpec::brier();
    if (head == "classification" && args.empty()) return LossSpec::classification();
    if (head == "three_part" && args.empty()) return LossSpec::three_part();
    if (head == "crossentropy") {
        return LossSpec::cross_entropy(args.empty() ? 1e-6 : parse_number(args, "epsilon"));
    }
    if (head == "asymmetric") {
        return LossSpec::asymmetric_class_penalty(args.empty() ? 2.0 : parse_number(args, "gamma"));
    }
    if (head == "weighted_fpfn") {
        if (args.empty()) return LossSpec::weighted_fp_fn(1.0, 3.0);
        const auto comma = args.find(',');
        if (comma == std::string::npos) throw InvalidInput("weighted_fpfn expects 'c_fp,c_fn'");
        return LossSpec::weighted_fp_fn(parse_number(args.substr(0, comma), "c_fp"),
                                        parse_number(args.substr(comma + 1), "c_fn"));
    }
    throw InvalidInput("unknown loss '" + text + "'");
}

std::vector<double> clamped_probabilities(const LabelDistribution& p, double eps) {
    const std::size_t n = p.num_classes();
    if (!(eps > 0.0) || eps * static_cast<double>(n) >= 1.0) {
        throw UnsupportedLoss("cross-entropy epsilon too large for " + std::to_string(n) + " classes");
    }
    std::vector<bool> floored(n, false);
    std::vector<double> q(n, 0.0);
    // Water-filling: at most n passes, each pass floors at least one more entry.
    for (std::size_t pass = 0; pass <= n; ++pass) {
        std::size_t n_floored = 0;
        double free_mass = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            if (floored[c]) {
                ++n_floored;
            } else {
                free_mass += p[c];
            }
        }
        const double budget = 1.0 - static_cast<double>(n_floored) * eps;
        bool changed = false;
        for (std::size_t c = 0; c < n; ++c) {
            if (floored[c]) {
                q[c] = eps;
                continue;
            }
            q[c] = free_mass > 0.0 ? p[c] * budget / free_mass : 0.0;
            if (q[c] < eps) {
                floored[c] = true;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return q;
}

std::vector<double> loss_vector(const LossSpec& spec, const LabelDistribution& p) {
    const std::size_t n = p.num_classes();
    std::vector<double> out(n, 0.0);
    switch (spec.kind) {
        case LossKind::Brier: {
            double sq = 0.0;
            for (std::size_t c = 0; c < n; ++c) sq += p[c] * p[c];
            // ||e_y - p||^2 = sum_c p_c^2 - 2 p_y + 1
            for (std::size_t y = 0; y < n; ++y) out[y] = std::max(0.0, sq - 2.0 * p[y] + 1.0);
            break;
        }
        case LossKind::CrossEntropy: {
            const auto q = clamped_probabilities(p, spec.epsilon);
            for (std::size_t y = 0; y < n; ++y) out[y] = -std::log(q[y]);
            break;
        }
        case LossKind::Classification: {
            const std::size_t yhat = p.argmax();
            for (std::size_t y = 0; y < n; ++y) out[y] = y == yhat ? 0.0 : 1.0;
            break;
        }
        case LossKind::WeightedFpFn: {
            require_binary(spec, n);
            const bool predict_positive = p[1] * spec.c_fn >= p[0] * spec.c_fp;
            out[0] = predict_positive ? spec.c_fp : 0.0;
            out[1] = predict_positive ? 0.0 : spec.c_fn;
            break;
        }
        case LossKind::ThreePart: {
            require_binary(spec, n);
            const double p1 = p[1];
            if (p1 < 0.25) {
                out = {0.0, 1.0};
            } else if (p1 < 15.0 / 16.0) {
                out = {0.25, 0.25};
            } else {
                out = {4.0, 0.0};
            }
            break;
        }
        case LossKind::AsymmetricClassPenalty: {
            // s_0 = gamma p_0 + (1 - gamma), s_c = p_c otherwise.
            std::size_t yhat = 0;
            double best = spec.gamma * p[0] + (1.0 - spec.gamma);
            for (std::size_t c = 1; c < n; ++c) {
                if (p[c] > best) {
                    best = p[c];
                    yhat = c;
                }
            }
            for (std::size_t y = 0; y < n; ++y) {
                if (yhat == 0) {
                    out[y] = y == 0 ? 0.0 : spec.gamma;
                } else {
                    out[y] = y == yhat ? 0.0 : 1.0;
                }
            }
            break;
        }
    }
    return out;
}

double pointwise_loss(const LossSpec& spec, std::size_t y, const LabelDistribution& p) {
    if (y >= p.num_classes()) throw InvalidInput("class index out of range");
    return loss_vector(spec, p)[y];
}

double expected_loss(const LossSpec& spec, const LabelDistribution& p_star, const LabelDistribution& p) {
    if (p_star.num_classes() != p.num_classes()) {
        throw InvalidInput("expected_loss: class count mismatch (" + std::to_string(p_star.num_classes()) +
                           " vs " + std::to_string(p.num_classes()) + ")");
    }
    const auto lv = loss_vector(spec, p);
    double total = 0.0;
    for (std::size_t y = 0; y < lv.size(); ++y) total += p_star[y] * lv[y];
    return total;
}

double entropy(const LossSpec& spec, const LabelDistribution& p) { return expected_loss(spec, p, p); }

}  // namespace hocroute
