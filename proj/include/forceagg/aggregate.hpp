#pragma once
// Final template ranking over each cluster's full membership and emission of
// one aggregated force element per cluster.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forceagg/evidence.hpp"
#include "forceagg/specification.hpp"
#include "forceagg/templates.hpp"

namespace forceagg {

struct RankedFit {
    std::size_t index = 0; // into the catalog
    TemplateFit fit;
};

/// Every catalog template scored against the whole membership as core,
/// best first; equal scores keep catalog order.
inline std::vector<RankedFit> final_fit(std::span<const Report> members, std::span<const Template> catalog,
                                        const TypeUniverse& universe) {
    std::vector<RankedFit> ranked;
    const auto fits = fit_catalog(members, catalog, universe);
    for (std::size_t y = 0; y < fits.size(); ++y)
        ranked.push_back({y, fits[y]});
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.fit.feasible != b.fit.feasible)
            return a.fit.feasible;
        return a.fit.mu > b.fit.mu;
    });
    return ranked;
}

struct SlotFill {
    std::size_t type = 0;
    std::int64_t required = 0;
    std::int64_t specific = 0;    // supplied by singleton reports (capped at required)
    std::int64_t nonspecific = 0; // allocated from multi-type reports
    std::int64_t filled = 0;      // specific + nonspecific, at most required
    std::int64_t unfilled = 0;    // required - specific: the admissible support left at the slot type
    std::int64_t open = 0;        // required - filled: capacity left after nonspecific allocation
};

struct SubsetCount {
    TypeMask subset = 0;
    std::int64_t count = 0;
};

struct ForceElement {
    std::size_t cluster = 0;
    std::optional<std::size_t> template_index;
    std::optional<std::string> template_name;
    TemplateFit fit;
    std::vector<SlotFill> slots;
    std::vector<SubsetCount> surplus; // subsets where membership support exceeds the template
    std::vector<std::size_t> members;
    bool empty_membership = false;
    bool infeasible = false;
};

/// Greedy slot fill: singleton propositions fill their own slot first; each
/// unit of a multi-type proposition then takes the first slot (template slot
/// order) among its types with capacity left. Multi-type reports are taken
/// in member order.
inline std::vector<SlotFill> fill_slots(const Template& t, std::span<const Report> members) {
    std::vector<SlotFill> fill;
    for (const auto& s : t.slots)
        fill.push_back({s.type, s.count, 0, 0, 0, 0, 0});
    for (const auto& r : members) {
        if (!r.proposition.is_singleton())
            continue;
        for (auto& f : fill)
            if (r.proposition.mask() == (TypeMask{1} << f.type))
                f.specific = std::min(f.required, f.specific + r.count);
    }
    for (auto& f : fill)
        f.filled = f.specific;
    for (const auto& r : members) {
        if (r.proposition.is_singleton())
            continue;
        std::int64_t units = r.count;
        for (auto& f : fill) {
            if (units == 0)
                break;
            if (!(r.proposition.mask() & (TypeMask{1} << f.type)))
                continue;
            const auto take = std::min(units, f.required - f.filled);
            f.nonspecific += take;
            f.filled += take;
            units -= take;
        }
    }
    for (auto& f : fill) {
        f.unfilled = f.required - f.specific;
        f.open = f.required - f.filled;
    }
    return fill;
}

inline ForceElement aggregate_cluster(std::size_t cluster, std::span<const std::size_t> member_ids,
                                      std::span<const Report> reports, std::span<const Template> catalog,
                                      const TypeUniverse& universe) {
    ForceElement fe;
    fe.cluster = cluster;
    fe.members.assign(member_ids.begin(), member_ids.end());
    if (member_ids.empty() || catalog.empty()) {
        fe.empty_membership = member_ids.empty();
        return fe;
    }
    std::vector<Report> members;
    for (auto i : member_ids)
        members.push_back(reports[i]);
    const auto ranked = final_fit(members, catalog, universe);
    const auto& top = ranked.front();
    const Template& t = catalog[top.index];
    fe.template_index = top.index;
    fe.template_name = t.name;
    fe.fit = top.fit;
    fe.infeasible = !top.fit.feasible;
    fe.slots = fill_slots(t, members);
    const auto st = template_support(t, universe);
    const auto sc = evidence_support(members, universe);
    for (auto x : subset_order(universe.size()))
        if (sc(x) > st(x))
            fe.surplus.push_back({x, sc(x) - st(x)});
    return fe;
}

/// One force element per cluster using its top-ranked template.
inline std::vector<ForceElement> aggregate(const ClusterPartition& partition, std::span<const Report> reports,
                                           std::span<const Template> catalog, const TypeUniverse& universe) {
    std::vector<ForceElement> out;
    for (std::size_t a = 0; a < partition.k; ++a)
        out.push_back(aggregate_cluster(a, partition.members[a], reports, catalog, universe));
    return out;
}

/// Input for the next aggregation level: one report per element with a
/// template, typed by the template name and counted as the template total.
/// Mass is the fit, kept inside (0, mass_cap].
struct NextLevel {
    TypeUniverse universe;
    std::vector<Report> reports;
};

inline NextLevel to_next_level(std::span<const ForceElement> elements, std::span<const Template> catalog,
                               double mass_cap = kDefaultMassCap) {
    std::vector<std::string> labels;
    for (const auto& fe : elements)
        if (fe.template_name && std::find(labels.begin(), labels.end(), *fe.template_name) == labels.end())
            labels.push_back(*fe.template_name);
    if (labels.empty())
        throw ValidationError("no force element carries a template");
    NextLevel next{TypeUniverse(labels), {}};
    for (const auto& fe : elements) {
        if (!fe.template_name)
            continue;
        const double mass = std::clamp(fe.fit.mu.value(), 1e-3, mass_cap);
        next.reports.push_back(make_report("cluster" + std::to_string(fe.cluster),
                                           Proposition::of(next.universe, {std::string_view(*fe.template_name)}),
                                           mass, catalog[*fe.template_index].total(), mass_cap));
    }
    return next;
}

} // namespace forceagg
