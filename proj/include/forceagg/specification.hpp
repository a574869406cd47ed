#pragma once
// Evidence specification after clustering: how plausibly each report belongs
// to each cluster, its credibility in its home cluster, and the resulting
// core / non-core split.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "forceagg/errors.hpp"
#include "forceagg/evidence.hpp"

namespace forceagg {

struct ClusterPartition {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> members; // report indices per cluster, ascending

    static ClusterPartition from_assignment(const HardAssignment& h) {
        ClusterPartition p;
        p.k = h.k;
        p.members.assign(h.k, {});
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (h.cluster_of[i] >= h.k)
                throw ValidationError("assignment names cluster " + std::to_string(h.cluster_of[i]) + " >= k");
            p.members[h.cluster_of[i]].push_back(i);
        }
        return p;
    }

    HardAssignment to_assignment(std::size_t n) const {
        HardAssignment h{k, std::vector<std::size_t>(n, k)};
        for (std::size_t a = 0; a < members.size(); ++a)
            for (auto i : members[a]) {
                if (i >= n || h.cluster_of[i] != k)
                    throw ValidationError("partition is not a disjoint cover of the reports");
                h.cluster_of[i] = a;
            }
        for (auto c : h.cluster_of)
            if (c == k)
                throw ValidationError("partition does not cover every report");
        return h;
    }
};

struct CredibilityRecord {
    std::size_t report = 0;
    std::size_t home = 0;
    std::vector<double> plausibility; // per cluster
    double credibility = 0.0;
};

struct CorePartition {
    double threshold = 0.5;
    std::vector<std::vector<std::size_t>> core;
    std::vector<std::vector<std::size_t>> non_core;

    std::size_t k() const noexcept { return core.size(); }
    bool empty_core(std::size_t a) const { return core.at(a).empty(); }
};

/// Pls(i in cluster b) = 1 - cluster conflict of i against b's members (i excluded).
inline double plausibility(std::size_t i, std::size_t b, const ClusterPartition& partition, const ConflictMatrix& j) {
    return 1.0 - cluster_conflict(j, i, partition.members.at(b));
}

/// Squared home plausibility over the sum of plausibilities across clusters.
inline CredibilityRecord credibility(std::size_t i, std::size_t home, const ClusterPartition& partition,
                                     const ConflictMatrix& j) {
    CredibilityRecord rec;
    rec.report = i;
    rec.home = home;
    rec.plausibility.resize(partition.k);
    double sum = 0.0;
    for (std::size_t b = 0; b < partition.k; ++b) {
        rec.plausibility[b] = plausibility(i, b, partition, j);
        sum += rec.plausibility[b];
    }
    const double p = rec.plausibility[home];
    rec.credibility = p * p / sum;
    return rec;
}

inline std::vector<CredibilityRecord> credibility_table(const ClusterPartition& partition, const ConflictMatrix& j) {
    std::vector<CredibilityRecord> table;
    for (std::size_t a = 0; a < partition.k; ++a)
        for (auto i : partition.members[a])
            table.push_back(credibility(i, a, partition, j));
    std::sort(table.begin(), table.end(), [](const auto& x, const auto& y) { return x.report < y.report; });
    return table;
}

/// Report joins its home core iff credibility >= threshold.
inline CorePartition extract_cores(const ClusterPartition& partition, const ConflictMatrix& j, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw ValidationError("core threshold must lie in (0, 1]");
    CorePartition cp;
    cp.threshold = threshold;
    cp.core.assign(partition.k, {});
    cp.non_core.assign(partition.k, {});
    for (std::size_t a = 0; a < partition.k; ++a)
        for (auto i : partition.members[a]) {
            if (credibility(i, a, partition, j).credibility >= threshold)
                cp.core[a].push_back(i);
            else
                cp.non_core[a].push_back(i);
        }
    return cp;
}

} // namespace forceagg
