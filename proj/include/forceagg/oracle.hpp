#pragma once
// Exhaustive reference computations for small instances.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "forceagg/errors.hpp"
#include "forceagg/evidence.hpp"

namespace forceagg {

inline constexpr double kOracleMaxAssignments = 1e7;
inline constexpr std::size_t kOracleMaxReports = 20;

struct OracleResult {
    HardAssignment assignment;
    double energy = 0.0;
};

/// Global minimum of the clustering energy by enumerating assignments up to
/// relabeling (restricted growth strings) with a partial-energy bound.
inline OracleResult oracle_min_energy(const ConflictMatrix& j, std::size_t k) {
    const std::size_t n = j.size();
    if (k < 1)
        throw ValidationError("k must be >= 1");
    if (static_cast<double>(n) * std::log10(static_cast<double>(k)) > std::log10(kOracleMaxAssignments) + 1e-12)
        throw GuardError("instance too large for exhaustive search: K^N = " + std::to_string(k) + "^" +
                         std::to_string(n) + " exceeds 10^7");

    OracleResult best{{k, std::vector<std::size_t>(n, 0)}, std::numeric_limits<double>::infinity()};
    std::vector<std::size_t> label(n, 0);

    // cost of placing i into cluster c given labels[0..i)
    auto place_cost = [&](std::size_t i, std::size_t c) {
        double e = 0.0;
        for (std::size_t p = 0; p < i; ++p)
            if (label[p] == c)
                e += j(i, p);
        return e;
    };

    auto recurse = [&](auto&& self, std::size_t i, std::size_t used, double partial) -> void {
        if (partial >= best.energy)
            return;
        if (i == n) {
            best.energy = partial;
            best.assignment.cluster_of = label;
            return;
        }
        const std::size_t limit = std::min(k, used + 1);
        for (std::size_t c = 0; c < limit; ++c) {
            label[i] = c;
            self(self, i + 1, std::max(used, c + 1), partial + place_cost(i, c));
        }
    };
    if (n == 0) {
        best.energy = 0.0;
        return best;
    }
    recurse(recurse, 0, 0, 0.0);
    return best;
}

inline OracleResult oracle_min_energy(std::span<const Report> reports, std::size_t k) {
    return oracle_min_energy(build_conflict_matrix(reports), k);
}

/// Conflict (mass on the empty set) of the full Dempster combination of the
/// reports' simple support functions; equal to 1 - prod(1 - k_step) of the
/// iterated normalized combination.
inline double oracle_exact_conflict(std::span<const Report> reports) {
    if (reports.size() > kOracleMaxReports)
        throw GuardError("exact combination limited to " + std::to_string(kOracleMaxReports) + " reports, got " +
                         std::to_string(reports.size()));
    constexpr TypeMask kTheta = ~TypeMask{0};
    std::map<TypeMask, double> focal{{kTheta, 1.0}};
    for (const auto& r : reports) {
        std::map<TypeMask, double> next;
        for (const auto& [set, w] : focal) {
            next[set & r.proposition.mask()] += w * r.mass;
            next[set] += w * (1.0 - r.mass);
        }
        focal = std::move(next);
    }
    auto it = focal.find(0);
    return it == focal.end() ? 0.0 : it->second;
}

/// The pairwise approximation of the same quantity: 1 - prod_{i<j} (1 - s_i s_j delta_ij).
inline double pairwise_conflict(std::span<const Report> reports) {
    double sum = 0.0;
    for (std::size_t a = 0; a < reports.size(); ++a)
        for (std::size_t b = a + 1; b < reports.size(); ++b)
            sum += pairwise_interaction(reports[a], reports[b]);
    return -std::expm1(-sum);
}

} // namespace forceagg
