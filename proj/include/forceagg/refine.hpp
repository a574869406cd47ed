#pragma once
// Refined (second) clustering. Core reports are clamped to their clusters,
// each cluster's selected template penalizes the non-core reports it cannot
// absorb through an extra interaction column in the local field, and
// non-core reports that saturate toward a cluster are promoted into its core,
// after which that cluster's penalties are recomputed.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "forceagg/annealer.hpp"
#include "forceagg/errors.hpp"
#include "forceagg/evidence.hpp"
#include "forceagg/specification.hpp"
#include "forceagg/templates.hpp"

namespace forceagg {

/// Which cluster columns carry template penalties for a non-core report.
///  home: only the column of the cluster the report was placed in.
///  all:  every cluster with a template, each evaluated as if the report were
///        part of that cluster's non-core.
enum class PenaltyMode { home, all };

struct BeliefEntry {
    std::size_t report = 0;
    Ratio m;
    double interaction = 0.0;
};

struct InteractionTable {
    Eigen::MatrixXd coupling;                      // N x K, J_{i(N+a)}
    std::vector<std::vector<BeliefEntry>> beliefs; // per cluster, home non-core entries
    std::vector<bool> no_template;                 // per cluster
};

namespace detail {

inline std::vector<bool> core_mask(const CorePartition& cores, std::size_t n) {
    std::vector<bool> in_core(n, false);
    for (const auto& c : cores.core)
        for (auto i : c)
            in_core.at(i) = true;
    return in_core;
}

// Recomputes column `a` of the coupling matrix (and the cluster's belief
// entries) from the current core / non-core sets.
inline void refresh_cluster(InteractionTable& table, std::size_t a, std::span<const Report> reports,
                            const CorePartition& cores, const std::optional<Template>& tmpl,
                            const TypeUniverse& universe, PenaltyMode mode, const std::vector<bool>& in_core) {
    table.coupling.col(static_cast<Eigen::Index>(a)).setZero();
    table.beliefs[a].clear();
    table.no_template[a] = !tmpl.has_value();
    if (!tmpl)
        return;
    const auto& nc = cores.non_core[a];
    const auto m = non_core_beliefs(reports, cores.core[a], nc, *tmpl, universe);
    for (std::size_t q = 0; q < nc.size(); ++q) {
        const double jv = template_interaction(m[q].value(), false);
        table.beliefs[a].push_back({nc[q], m[q], jv});
        table.coupling(static_cast<Eigen::Index>(nc[q]), static_cast<Eigen::Index>(a)) = jv;
    }
    if (mode == PenaltyMode::all) {
        std::vector<std::size_t> trial(nc.begin(), nc.end());
        for (std::size_t i = 0; i < reports.size(); ++i) {
            if (in_core[i] || std::find(nc.begin(), nc.end(), i) != nc.end())
                continue;
            trial.push_back(i);
            const auto mt = non_core_beliefs(reports, cores.core[a], trial, *tmpl, universe);
            trial.pop_back();
            table.coupling(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) =
                template_interaction(mt.back().value(), false);
        }
    }
}

} // namespace detail

/// Template-to-report interactions for every cluster. Clusters without a
/// selected template get a zero column and are flagged in `no_template`.
inline InteractionTable build_interactions(std::span<const Report> reports, const CorePartition& cores,
                                           std::span<const std::optional<Template>> selected,
                                           const TypeUniverse& universe, PenaltyMode mode = PenaltyMode::home) {
    const std::size_t k = cores.k();
    if (selected.size() != k)
        throw ValidationError("need one template slot per cluster");
    InteractionTable table;
    table.coupling = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(reports.size()), static_cast<Eigen::Index>(k));
    table.beliefs.assign(k, {});
    table.no_template.assign(k, true);
    const auto in_core = detail::core_mask(cores, reports.size());
    for (std::size_t a = 0; a < k; ++a)
        detail::refresh_cluster(table, a, reports, cores, selected[a], universe, mode, in_core);
    return table;
}

struct RefineConfig {
    AnnealConfig anneal;
    PenaltyMode penalty_mode = PenaltyMode::home;
    bool restart_on_promotion = false;
};

struct Promotion {
    std::size_t report = 0;
    std::size_t cluster = 0;
    std::size_t outer_step = 0;
    double v = 0.0; // V_ia at promotion time
};

/// A promotion left the receiving cluster's core overcrowding its template.
struct FeasibilityEvent {
    std::size_t cluster = 0;
    std::size_t report = 0;
    std::size_t outer_step = 0;
    TypeMask subset = 0; // first subset with AC < 0
    std::int64_t ac = 0;
};

struct RefineResult {
    HardAssignment assignment;
    ClusterPartition partition;
    CorePartition final_cores;
    InteractionTable interactions; // as of termination
    std::vector<Promotion> promotions;
    std::vector<FeasibilityEvent> feasibility_events;
    std::vector<TraceRecord> trace;
    TemperatureEstimate temperature;
    SpinField field;
    bool converged = false;
};

/// Restart after a promotion only when configured to.
inline SweepAction restart_policy(bool promoted, const RefineConfig& config) {
    return promoted && config.restart_on_promotion ? SweepAction::restart : SweepAction::proceed;
}

inline RefineResult refined_cluster(std::span<const Report> reports, const ConflictMatrix& j, const CorePartition& cores,
                                    std::span<const std::optional<Template>> selected, const TypeUniverse& universe,
                                    const RefineConfig& config) {
    const std::size_t n = reports.size();
    const std::size_t k = cores.k();
    if (j.size() != n)
        throw ValidationError("conflict matrix size does not match report count");
    if (k < 1)
        throw ValidationError("refined clustering needs k >= 1");
    AnnealConfig ac = config.anneal;
    ac.k = k;
    ac.validate();

    // Cores and non-cores must partition the reports.
    std::vector<int> seen(n, 0);
    ClampMap clamps(n);
    for (std::size_t a = 0; a < k; ++a) {
        for (auto i : cores.core[a]) {
            if (i >= n)
                throw ValidationError("core names an unknown report");
            ++seen[i];
            clamps[i] = a;
        }
        for (auto i : cores.non_core.at(a)) {
            if (i >= n)
                throw ValidationError("non-core names an unknown report");
            ++seen[i];
        }
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
        throw ValidationError("cores and non-cores must partition the reports");
    const bool any_clamp = std::any_of(clamps.begin(), clamps.end(), [](const auto& c) { return c.has_value(); });
    if (!any_clamp && n < k)
        throw ValidationError("need N >= K reports when no rows are clamped");

    RefineResult out;
    out.final_cores = cores;
    out.interactions = build_interactions(reports, cores, selected, universe, config.penalty_mode);
    auto in_core = detail::core_mask(cores, n);

    NoiseSource noise(ac.seed);
    SpinField field = init_spin_field(n, ac, clamps, noise);

    auto after_sweep = [&](SpinField& f, std::size_t outer) {
        bool promoted = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (f.clamped(i))
                continue;
            for (std::size_t a = 0; a < k; ++a) {
                const double v = f.v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
                if (!(v >= ac.promote_threshold && v < 1.0) || !selected[a])
                    continue;
                f.clamp_row(i, a);
                out.interactions.coupling.row(static_cast<Eigen::Index>(i)).setZero();
                for (auto& nc : out.final_cores.non_core)
                    nc.erase(std::remove(nc.begin(), nc.end(), i), nc.end());
                for (auto& b : out.interactions.beliefs)
                    b.erase(std::remove_if(b.begin(), b.end(), [&](const auto& e) { return e.report == i; }), b.end());
                out.final_cores.core[a].push_back(i);
                std::sort(out.final_cores.core[a].begin(), out.final_cores.core[a].end());
                in_core[i] = true;
                detail::refresh_cluster(out.interactions, a, reports, out.final_cores, selected[a], universe,
                                        config.penalty_mode, in_core);
                out.promotions.push_back({i, a, outer, v});

                const auto check = admissible(template_support(*selected[a], universe),
                                              evidence_support(reports, out.final_cores.core[a], universe));
                if (!check.feasible) {
                    for (auto x : subset_order(universe.size()))
                        if (check.ac(x) < 0) {
                            out.feasibility_events.push_back({a, i, outer, x, check.ac(x)});
                            break;
                        }
                }
                promoted = true;
                break;
            }
        }
        return restart_policy(promoted, config);
    };

    AnnealResult run = run_schedule(j, ac, std::move(field), out.interactions.coupling, noise, after_sweep);
    out.assignment = run.assignment;
    out.partition = ClusterPartition::from_assignment(run.assignment);
    out.trace = std::move(run.trace);
    out.temperature = run.temperature;
    out.field = std::move(run.field);
    out.converged = run.converged;
    return out;
}

} // namespace forceagg
