#pragma once
// The seven-step aggregation:
//   1 standard clustering            5 refined clustering
//   2 core extraction                6 final template ranking
//   3 template selection per core    7 aggregation into force elements
//   4 basic beliefs and interactions
// Entry points start at step 1, at step 2 (given an assignment) or at step 3
// (given cores).

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "forceagg/aggregate.hpp"
#include "forceagg/annealer.hpp"
#include "forceagg/errors.hpp"
#include "forceagg/evidence.hpp"
#include "forceagg/refine.hpp"
#include "forceagg/specification.hpp"
#include "forceagg/templates.hpp"

namespace forceagg {

struct PipelineConfig {
    AnnealConfig anneal;
    double core_threshold = 0.5;
    PenaltyMode penalty_mode = PenaltyMode::home;
    bool restart_on_promotion = false;
    double mass_cap = kDefaultMassCap;

    RefineConfig refine_config() const { return {anneal, penalty_mode, restart_on_promotion}; }
};

struct CoreTemplate {
    std::optional<TemplateSelection> selection;
    std::vector<TemplateFit> candidates; // catalog order
    bool empty_core = false;
    SupportFunction st, sc, ac; // for the selected template; empty without one
};

struct NonCoreSupport {
    SupportFunction snc, nac; // empty without a selected template
};

struct PipelineResult {
    std::optional<AnnealResult> step1; // absent when the run starts from an assignment or cores
    HardAssignment initial;
    std::vector<CredibilityRecord> credibility; // empty when the run starts from cores
    CorePartition cores;
    std::vector<CoreTemplate> templates;
    std::vector<NonCoreSupport> non_core;
    InteractionTable interactions;
    RefineResult refined;
    std::vector<std::vector<RankedFit>> rankings;
    std::vector<ForceElement> elements;
    std::vector<std::pair<std::string, double>> runtimes_ms;
};

namespace detail {

template <class F>
auto run_stage(int stage, PipelineResult& out, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            out.runtimes_ms.emplace_back("step" + std::to_string(stage),
                                         std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        } else {
            auto r = f();
            out.runtimes_ms.emplace_back("step" + std::to_string(stage),
                                         std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
            return r;
        }
    } catch (const StageError&) {
        throw;
    } catch (const ValidationError& e) {
        throw StageError(stage, e.what(), StageError::Cause::validation);
    } catch (const GuardError& e) {
        throw StageError(stage, e.what(), StageError::Cause::guard);
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

inline std::vector<Report> gather(std::span<const Report> reports, std::span<const std::size_t> idx) {
    std::vector<Report> out;
    out.reserve(idx.size());
    for (auto i : idx)
        out.push_back(reports[i]);
    return out;
}

} // namespace detail

/// Steps 3..7 from a given core / non-core split.
inline PipelineResult run_from_cores(std::span<const Report> reports, const TypeUniverse& universe,
                                     std::span<const Template> catalog, const CorePartition& cores,
                                     const PipelineConfig& config, PipelineResult out = {}) {
    const std::size_t k = cores.k();
    const ConflictMatrix j = build_conflict_matrix(reports);
    out.cores = cores;

    std::vector<std::optional<Template>> selected(k);
    detail::run_stage(3, out, [&] {
        out.templates.assign(k, {});
        for (std::size_t a = 0; a < k; ++a) {
            auto& ct = out.templates[a];
            const auto core = detail::gather(reports, cores.core[a]);
            ct.empty_core = core.empty();
            if (catalog.empty())
                continue;
            ct.candidates = fit_catalog(core, catalog, universe);
            ct.selection = select_template(core, catalog, universe);
            if (ct.selection) {
                const Template& t = catalog[ct.selection->index];
                selected[a] = t;
                ct.st = template_support(t, universe);
                ct.sc = evidence_support(core, universe);
                ct.ac = admissible(ct.st, ct.sc).ac;
            }
        }
    });

    detail::run_stage(4, out, [&] {
        out.non_core.assign(k, {});
        for (std::size_t a = 0; a < k; ++a)
            if (selected[a]) {
                out.non_core[a].snc = evidence_support(reports, cores.non_core[a], universe);
                out.non_core[a].nac = inadmissible(out.non_core[a].snc, out.templates[a].ac);
            }
        out.interactions = build_interactions(reports, cores, selected, universe, config.penalty_mode);
    });

    detail::run_stage(5, out, [&] {
        out.refined = refined_cluster(reports, j, cores, selected, universe, config.refine_config());
    });

    detail::run_stage(6, out, [&] {
        out.rankings.clear();
        for (std::size_t a = 0; a < k; ++a) {
            const auto members = detail::gather(reports, out.refined.partition.members[a]);
            out.rankings.push_back(catalog.empty() ? std::vector<RankedFit>{} : final_fit(members, catalog, universe));
        }
    });

    detail::run_stage(7, out, [&] { out.elements = aggregate(out.refined.partition, reports, catalog, universe); });
    return out;
}

/// Steps 2..7 from a given hard assignment.
inline PipelineResult run_from_assignment(std::span<const Report> reports, const TypeUniverse& universe,
                                          std::span<const Template> catalog, const HardAssignment& assignment,
                                          const PipelineConfig& config, PipelineResult out = {}) {
    if (assignment.size() != reports.size())
        throw StageError(2, "assignment does not cover every report", StageError::Cause::validation);
    out.initial = assignment;
    CorePartition cores = detail::run_stage(2, out, [&] {
        const ConflictMatrix j = build_conflict_matrix(reports);
        const auto partition = ClusterPartition::from_assignment(assignment);
        out.credibility = credibility_table(partition, j);
        return extract_cores(partition, j, config.core_threshold);
    });
    return run_from_cores(reports, universe, catalog, cores, config, std::move(out));
}

/// All seven steps.
inline PipelineResult run_pipeline(std::span<const Report> reports, const TypeUniverse& universe,
                                   std::span<const Template> catalog, const PipelineConfig& config) {
    PipelineResult out;
    AnnealResult first = detail::run_stage(1, out, [&] { return anneal(reports, config.anneal); });
    HardAssignment initial = first.assignment;
    out.step1 = std::move(first);
    return run_from_assignment(reports, universe, catalog, initial, config, std::move(out));
}

} // namespace forceagg
