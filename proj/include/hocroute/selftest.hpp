#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hocroute {

struct PropertyResult {
    std::string name;
    std::size_t trials = 0;
    std::size_t violations = 0;
    std::size_t skipped = 0;  // ties excluded from the decision-tree comparison
    // Largest observed (lhs - rhs) of the checked inequality; negative means slack.
    double worst_margin = -std::numeric_limits<double>::infinity();
    // First failure after shrinking, as a human-readable tuple.
    std::optional<std::string> counterexample;

    bool passed() const noexcept { return violations == 0; }
};

struct LemmaReport {
    std::uint64_t seed = 0;
    std::size_t trials = 0;
    std::vector<PropertyResult> properties;

    bool passed() const noexcept;
    std::string to_json() const;
};

/// Randomized checks of the loss and routing lemmas:
///   lipschitz/<loss>/<C>:  |L(p1,q) - L(p2,q)| <= (B/2)|p1 - p2|_1
///   entropy_lipschitz/...: |H(p1) - H(p2)| <= (B/2)|p1 - p2|_1
///   proper/<loss>/<C>:     L(p, p) <= L(p, q)
///   tree_vs_argmin:        closed-form decision equals the brute-force argmin off ties
///   simulated_gap/<loss>:  per-bin |simulated - true| cost <= (B/2) W1, binary bins
/// Every property uses its own RNG stream derived from `seed`, so the report is
/// deterministic. Failing inputs are shrunk by bisecting the perturbation size.
LemmaReport run_lemma_checks(std::uint64_t seed, std::size_t trials);

}  // namespace hocroute
