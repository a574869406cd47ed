#pragma once
// Partition quality against ground truth: misplacements under the best
// one-to-one matching of clusters to truth units, and the adjusted Rand index.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forceagg/errors.hpp"

namespace forceagg {

struct EvalReport {
    std::size_t misplacements = 0;
    double agreement = 1.0; // adjusted Rand index
    std::vector<std::optional<std::size_t>> matched_unit;   // per result cluster
    std::vector<std::optional<bool>> template_correct;      // per result cluster, when names are given
    std::vector<std::pair<std::string, double>> runtimes_ms; // per pipeline step, when timed
};

namespace detail {

inline double choose2(double x) { return x * (x - 1.0) / 2.0; }

// Maximum-weight one-to-one matching between rows and columns of w
// (rows x cols), exact by DP over subsets of the smaller side.
inline std::vector<std::optional<std::size_t>> best_matching(const std::vector<std::vector<std::int64_t>>& w,
                                                             std::size_t rows, std::size_t cols) {
    const bool transpose = cols > rows;
    const std::size_t outer = transpose ? cols : rows;
    const std::size_t inner = transpose ? rows : cols;
    if (inner > 20)
        throw GuardError("matching limited to 20 clusters on the smaller side");
    auto weight = [&](std::size_t o, std::size_t i) { return transpose ? w[i][o] : w[o][i]; };
    const std::size_t masks = std::size_t{1} << inner;
    constexpr std::int64_t kUnset = std::numeric_limits<std::int64_t>::min();
    // best[o][mask]: max weight using outer items o.. with inner items in mask already taken
    std::vector<std::vector<std::int64_t>> best(outer + 1, std::vector<std::int64_t>(masks, kUnset));
    std::vector<std::vector<int>> choice(outer, std::vector<int>(masks, -1));
    for (std::size_t m = 0; m < masks; ++m)
        best[outer][m] = 0;
    for (std::size_t o = outer; o-- > 0;)
        for (std::size_t m = 0; m < masks; ++m) {
            std::int64_t v = best[o + 1][m];
            int c = -1;
            for (std::size_t i = 0; i < inner; ++i)
                if (!(m & (std::size_t{1} << i))) {
                    const auto cand = weight(o, i) + best[o + 1][m | (std::size_t{1} << i)];
                    if (cand > v) {
                        v = cand;
                        c = static_cast<int>(i);
                    }
                }
            best[o][m] = v;
            choice[o][m] = c;
        }
    std::vector<std::optional<std::size_t>> row_to_col(rows);
    std::size_t m = 0;
    for (std::size_t o = 0; o < outer; ++o) {
        const int c = choice[o][m];
        if (c < 0)
            continue;
        m |= std::size_t{1} << c;
        if (transpose)
            row_to_col[static_cast<std::size_t>(c)] = o;
        else
            row_to_col[o] = static_cast<std::size_t>(c);
    }
    return row_to_col;
}

} // namespace detail

inline double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size())
        throw ValidationError("partitions cover different report counts");
    const std::size_t n = a.size();
    if (n < 2)
        return 1.0;
    const std::size_t ka = *std::max_element(a.begin(), a.end()) + 1;
    const std::size_t kb = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<std::vector<double>> table(ka, std::vector<double>(kb, 0.0));
    std::vector<double> ra(ka, 0.0), rb(kb, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        table[a[i]][b[i]] += 1.0;
        ra[a[i]] += 1.0;
        rb[b[i]] += 1.0;
    }
    double index = 0.0, sa = 0.0, sb = 0.0;
    for (const auto& row : table)
        for (double x : row)
            index += detail::choose2(x);
    for (double x : ra)
        sa += detail::choose2(x);
    for (double x : rb)
        sb += detail::choose2(x);
    const double expected = sa * sb / detail::choose2(static_cast<double>(n));
    const double maximum = 0.5 * (sa + sb);
    if (maximum == expected)
        return index == maximum ? 1.0 : 0.0;
    return (index - expected) / (maximum - expected);
}

/// `result[i]` and `truth[i]` are cluster / unit labels of report i.
/// `chosen_templates` (per result cluster) and `truth_templates` (per unit)
/// are optional; when both are given, template correctness is filled in.
inline EvalReport evaluate(std::span<const std::size_t> result, std::span<const std::size_t> truth,
                           std::span<const std::optional<std::string>> chosen_templates = {},
                           std::span<const std::string> truth_templates = {}) {
    if (result.size() != truth.size())
        throw ValidationError("result and ground truth cover different report counts");
    EvalReport rep;
    if (result.empty())
        return rep;
    std::size_t kr = *std::max_element(result.begin(), result.end()) + 1;
    kr = std::max(kr, chosen_templates.size());
    const std::size_t ku = *std::max_element(truth.begin(), truth.end()) + 1;
    std::vector<std::vector<std::int64_t>> overlap(kr, std::vector<std::int64_t>(ku, 0));
    for (std::size_t i = 0; i < result.size(); ++i)
        ++overlap[result[i]][truth[i]];
    rep.matched_unit = detail::best_matching(overlap, kr, ku);
    std::int64_t kept = 0;
    for (std::size_t c = 0; c < kr; ++c)
        if (rep.matched_unit[c])
            kept += overlap[c][*rep.matched_unit[c]];
    rep.misplacements = result.size() - static_cast<std::size_t>(kept);
    rep.agreement = adjusted_rand_index(result, truth);
    if (!chosen_templates.empty() && !truth_templates.empty()) {
        rep.template_correct.resize(kr);
        for (std::size_t c = 0; c < kr && c < chosen_templates.size(); ++c)
            if (rep.matched_unit[c] && chosen_templates[c])
                rep.template_correct[c] = *chosen_templates[c] == truth_templates[*rep.matched_unit[c]];
    }
    return rep;
}

} // namespace forceagg
