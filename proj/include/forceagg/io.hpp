#pragma once
// JSON file formats.
//
//   reports:    {"universe": [labels], "reports": [{"id", "proposition": [labels], "mass", "count"}]}
//   templates:  {"templates": [{"name", "slots": [{"type", "count"}]}]}
//   assignment: {"k": K, "assignment": [{"id", "cluster"}]}          clusters are 0-based
//   config:     {"k", "epsilon", "tau", "gamma", "alpha", "inner_tol", "freeze_tol",
//                "promote_threshold", "seed", "max_outer_steps", "max_inner_sweeps",
//                "core_threshold", "penalty_mode", "restart_on_promotion", "mass_cap"}
//   scenario spec: {"universe", "templates", "units": [names], "mass": [min, max],
//                   "nonspecific": p, "decoys": n}
//   scenario:   reports file + templates file + {"truth": [{"template", "members": [ids]}], "seed"}
//   pipeline:   {"config", "step1" .. "step7"}

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "forceagg/aggregate.hpp"
#include "forceagg/annealer.hpp"
#include "forceagg/errors.hpp"
#include "forceagg/evaluate.hpp"
#include "forceagg/evidence.hpp"
#include "forceagg/pipeline.hpp"
#include "forceagg/refine.hpp"
#include "forceagg/scenario.hpp"
#include "forceagg/specification.hpp"
#include "forceagg/templates.hpp"

namespace forceagg::io {

using json = nlohmann::ordered_json;

struct ReportSet {
    TypeUniverse universe;
    std::vector<Report> reports;
    std::vector<std::string> warnings;
};

namespace detail {

template <class F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ValidationError(std::string(what) + ": " + e.what());
    }
}

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace detail

inline TypeUniverse parse_universe(const json& doc) {
    return detail::guarded("universe", [&] {
        return TypeUniverse(doc.at("universe").get<std::vector<std::string>>());
    });
}

/// Masses above `mass_cap` (but at most 1) are clamped to the cap with a warning.
inline ReportSet parse_reports(const json& doc, double mass_cap = kDefaultMassCap) {
    return detail::guarded("reports", [&] {
        ReportSet set{parse_universe(doc), {}, {}};
        for (const auto& r : doc.at("reports")) {
            auto id = r.at("id").get<std::string>();
            auto labels = r.at("proposition").get<std::vector<std::string>>();
            double mass = r.at("mass").get<double>();
            const auto count = r.value("count", std::int64_t{1});
            if (mass > mass_cap && mass <= 1.0) {
                set.warnings.push_back("report '" + id + "': mass " + detail::fmt_double(mass) + " clamped to " +
                                       detail::fmt_double(mass_cap));
                mass = mass_cap;
            }
            for (const auto& prev : set.reports)
                if (prev.id == id)
                    throw ValidationError("duplicate report id '" + id + "'");
            set.reports.push_back(make_report(id, Proposition::of(set.universe, labels), mass, count, mass_cap));
        }
        return set;
    });
}

inline std::vector<Template> parse_templates(const json& doc, const TypeUniverse& universe) {
    return detail::guarded("templates", [&] {
        std::vector<Template> out;
        for (const auto& t : doc.at("templates")) {
            std::vector<std::pair<std::string, std::int64_t>> slots;
            for (const auto& s : t.at("slots"))
                slots.emplace_back(s.at("type").get<std::string>(), s.at("count").get<std::int64_t>());
            auto name = t.at("name").get<std::string>();
            for (const auto& prev : out)
                if (prev.name == name)
                    throw ValidationError("duplicate template name '" + name + "'");
            out.push_back(make_template(std::move(name), universe, slots));
        }
        return out;
    });
}

inline json templates_to_json(std::span<const Template> catalog, const TypeUniverse& universe) {
    json arr = json::array();
    for (const auto& t : catalog) {
        json slots = json::array();
        for (const auto& s : t.slots)
            slots.push_back({{"type", universe.label(s.type)}, {"count", s.count}});
        arr.push_back({{"name", t.name}, {"slots", slots}});
    }
    return arr;
}

inline json reports_to_json(std::span<const Report> reports, const TypeUniverse& universe) {
    json arr = json::array();
    for (const auto& r : reports)
        arr.push_back({{"id", r.id},
                       {"proposition", universe.labels_of(r.proposition.mask())},
                       {"mass", r.mass},
                       {"count", r.count}});
    return arr;
}

inline std::size_t index_of_id(std::span<const Report> reports, const std::string& id) {
    for (std::size_t i = 0; i < reports.size(); ++i)
        if (reports[i].id == id)
            return i;
    throw ValidationError("unknown report id '" + id + "'");
}

inline HardAssignment parse_assignment(const json& doc, std::span<const Report> reports) {
    return detail::guarded("assignment", [&] {
        HardAssignment h;
        h.k = doc.at("k").get<std::size_t>();
        if (h.k < 1)
            throw ValidationError("assignment k must be >= 1");
        h.cluster_of.assign(reports.size(), h.k);
        for (const auto& e : doc.at("assignment")) {
            const auto i = index_of_id(reports, e.at("id").get<std::string>());
            const auto c = e.at("cluster").get<std::size_t>();
            if (c >= h.k)
                throw ValidationError("assignment cluster " + std::to_string(c) + " >= k");
            h.cluster_of[i] = c;
        }
        for (std::size_t i = 0; i < reports.size(); ++i)
            if (h.cluster_of[i] == h.k)
                throw ValidationError("assignment misses report '" + reports[i].id + "'");
        return h;
    });
}

inline json assignment_to_json(const HardAssignment& h, std::span<const Report> reports) {
    json arr = json::array();
    for (std::size_t i = 0; i < h.size(); ++i)
        arr.push_back({{"id", reports[i].id}, {"cluster", h.cluster_of[i]}});
    return {{"k", h.k}, {"assignment", arr}};
}

inline const char* to_string(PenaltyMode m) { return m == PenaltyMode::home ? "home" : "all"; }

inline PenaltyMode parse_penalty_mode(const std::string& s) {
    if (s == "home")
        return PenaltyMode::home;
    if (s == "all")
        return PenaltyMode::all;
    throw ValidationError("penalty mode must be 'home' or 'all', got '" + s + "'");
}

/// Overlays keys present in `doc` onto `base`.
inline PipelineConfig parse_config(const json& doc, PipelineConfig base = {}) {
    return detail::guarded("config", [&] {
        auto& a = base.anneal;
        if (doc.contains("k")) a.k = doc.at("k").get<std::size_t>();
        if (doc.contains("epsilon")) a.epsilon = doc.at("epsilon").get<double>();
        if (doc.contains("tau")) a.tau = doc.at("tau").get<double>();
        if (doc.contains("gamma")) a.gamma = doc.at("gamma").get<double>();
        if (doc.contains("alpha") && !doc.at("alpha").is_null()) a.alpha = doc.at("alpha").get<double>();
        if (doc.contains("inner_tol")) a.inner_tol = doc.at("inner_tol").get<double>();
        if (doc.contains("freeze_tol")) a.freeze_tol = doc.at("freeze_tol").get<double>();
        if (doc.contains("promote_threshold")) a.promote_threshold = doc.at("promote_threshold").get<double>();
        if (doc.contains("seed")) a.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("max_outer_steps")) a.max_outer_steps = doc.at("max_outer_steps").get<std::size_t>();
        if (doc.contains("max_inner_sweeps")) a.max_inner_sweeps = doc.at("max_inner_sweeps").get<std::size_t>();
        if (doc.contains("core_threshold")) base.core_threshold = doc.at("core_threshold").get<double>();
        if (doc.contains("penalty_mode")) base.penalty_mode = parse_penalty_mode(doc.at("penalty_mode").get<std::string>());
        if (doc.contains("restart_on_promotion")) base.restart_on_promotion = doc.at("restart_on_promotion").get<bool>();
        if (doc.contains("mass_cap")) base.mass_cap = doc.at("mass_cap").get<double>();
        a.validate();
        if (!(base.mass_cap > 0.0 && base.mass_cap < 1.0))
            throw ValidationError("mass_cap must lie in (0, 1)");
        return base;
    });
}

inline json alpha_table() {
    json t = json::object();
    for (std::size_t k = 1; k <= 11; ++k)
        t[std::to_string(k)] = alpha_for_k(k);
    return t;
}

inline json config_to_json(const PipelineConfig& c) {
    const auto& a = c.anneal;
    return {{"k", a.k},
            {"epsilon", a.epsilon},
            {"tau", a.tau},
            {"gamma", a.gamma},
            {"alpha", a.effective_alpha()},
            {"alpha_by_k", alpha_table()},
            {"inner_tol", a.inner_tol},
            {"freeze_tol", a.freeze_tol},
            {"promote_threshold", a.promote_threshold},
            {"seed", a.seed},
            {"max_outer_steps", a.max_outer_steps},
            {"max_inner_sweeps", a.max_inner_sweeps},
            {"core_threshold", c.core_threshold},
            {"penalty_mode", to_string(c.penalty_mode)},
            {"restart_on_promotion", c.restart_on_promotion},
            {"mass_cap", c.mass_cap}};
}

/// Rows ordered by subset cardinality, then lexicographically.
inline json support_table(const TypeUniverse& universe,
                          std::initializer_list<std::pair<const char*, const SupportFunction*>> columns) {
    json rows = json::array();
    for (auto x : subset_order(universe.size())) {
        json row = {{"subset", universe.labels_of(x)}};
        for (const auto& [name, f] : columns)
            row[name] = (*f)(x);
        rows.push_back(row);
    }
    return rows;
}

inline json ratio_json(const Ratio& r) { return {{"value", r.value()}, {"exact", r.str()}}; }

inline json fit_json(const TemplateFit& f) {
    return {{"template", f.template_name},
            {"mu1", ratio_json(f.mu1)},
            {"mu2", ratio_json(f.mu2)},
            {"mu", ratio_json(f.mu)},
            {"feasible", f.feasible}};
}

inline json trace_json(const TraceRecord& t) {
    return {{"outer_step", t.outer_step},
            {"temperature", t.temperature},
            {"energy", t.energy},
            {"saturation", t.saturation},
            {"sweeps", t.sweeps},
            {"restarted", t.restarted}};
}

/// Line-delimited trace records.
inline std::string trace_lines(std::span<const TraceRecord> trace) {
    std::string out;
    for (const auto& t : trace)
        out += trace_json(t).dump() + "\n";
    return out;
}

inline json ids(std::span<const std::size_t> idx, std::span<const Report> reports) {
    json arr = json::array();
    for (auto i : idx)
        arr.push_back(reports[i].id);
    return arr;
}

inline json cluster_step_json(const AnnealResult& r, std::span<const Report> reports) {
    json doc = assignment_to_json(r.assignment, reports);
    doc["energy"] = energy(r.assignment, build_conflict_matrix(reports));
    doc["converged"] = r.converged;
    doc["outer_steps"] = r.trace.size();
    doc["critical_temperature"] = {{"t_c", r.temperature.t_c},
                                   {"lambda_min", r.temperature.lambda_min},
                                   {"lambda_max", r.temperature.lambda_max}};
    return doc;
}

inline json force_element_json(const ForceElement& fe, std::span<const Report> reports, const TypeUniverse& universe) {
    json slots = json::array();
    for (const auto& s : fe.slots)
        slots.push_back({{"type", universe.label(s.type)},
                         {"required", s.required},
                         {"specific", s.specific},
                         {"nonspecific", s.nonspecific},
                         {"filled", s.filled},
                         {"unfilled", s.unfilled},
                         {"open", s.open}});
    json surplus = json::array();
    for (const auto& s : fe.surplus)
        surplus.push_back({{"subset", universe.labels_of(s.subset)}, {"count", s.count}});
    json doc = {{"cluster", fe.cluster},
                {"template", fe.template_name ? json(*fe.template_name) : json(nullptr)},
                {"fit", fit_json(fe.fit)},
                {"slots", slots},
                {"surplus", surplus},
                {"members", ids(fe.members, reports)},
                {"flags", {{"empty_membership", fe.empty_membership}, {"infeasible", fe.infeasible}}}};
    return doc;
}

/// The full pipeline document. Contains no timings, so identical inputs and
/// seeds give byte-identical output.
inline json pipeline_document(const PipelineResult& res, std::span<const Report> reports, const TypeUniverse& universe,
                              std::span<const Template> catalog, const PipelineConfig& config) {
    json doc;
    doc["config"] = config_to_json(config);

    if (res.step1)
        doc["step1"] = cluster_step_json(*res.step1, reports);
    else
        doc["step1"] = assignment_to_json(res.initial, reports), doc["step1"]["given"] = true;

    {
        json cred = json::array();
        for (const auto& c : res.credibility)
            cred.push_back({{"id", reports[c.report].id},
                            {"cluster", c.home},
                            {"plausibility", c.plausibility},
                            {"credibility", c.credibility}});
        json clusters = json::array();
        for (std::size_t a = 0; a < res.cores.k(); ++a)
            clusters.push_back({{"cluster", a},
                                {"core", ids(res.cores.core[a], reports)},
                                {"non_core", ids(res.cores.non_core[a], reports)},
                                {"empty_core", res.cores.empty_core(a)}});
        doc["step2"] = {{"threshold", res.cores.threshold}, {"credibility", cred}, {"clusters", clusters}};
    }

    {
        json clusters = json::array();
        for (std::size_t a = 0; a < res.templates.size(); ++a) {
            const auto& ct = res.templates[a];
            json c = {{"cluster", a}, {"empty_core", ct.empty_core}};
            json cands = json::array();
            for (const auto& f : ct.candidates)
                cands.push_back(fit_json(f));
            c["candidates"] = cands;
            if (ct.selection) {
                c["template"] = catalog[ct.selection->index].name;
                c["fit"] = fit_json(ct.selection->fit);
                c["support"] = support_table(universe, {{"ST", &ct.st}, {"SC", &ct.sc}, {"AC", &ct.ac}});
            } else {
                c["template"] = nullptr;
                c["no_feasible_template"] = true;
            }
            clusters.push_back(c);
        }
        doc["step3"] = {{"clusters", clusters}};
    }

    {
        json clusters = json::array();
        for (std::size_t a = 0; a < res.non_core.size(); ++a) {
            json c = {{"cluster", a}, {"no_template", res.interactions.no_template[a]}};
            if (!res.interactions.no_template[a]) {
                const auto& nc = res.non_core[a];
                c["support"] = support_table(universe, {{"SNC", &nc.snc}, {"NAC", &nc.nac}});
            }
            json beliefs = json::array();
            for (const auto& b : res.interactions.beliefs[a])
                beliefs.push_back({{"id", reports[b.report].id}, {"m", ratio_json(b.m)}, {"interaction", b.interaction}});
            c["beliefs"] = beliefs;
            clusters.push_back(c);
        }
        doc["step4"] = {{"penalty_mode", to_string(config.penalty_mode)}, {"clusters", clusters}};
    }

    {
        const auto& rf = res.refined;
        json doc5 = assignment_to_json(rf.assignment, reports);
        doc5["energy"] = energy(rf.assignment, build_conflict_matrix(reports));
        doc5["converged"] = rf.converged;
        doc5["outer_steps"] = rf.trace.size();
        json promos = json::array();
        for (const auto& p : rf.promotions)
            promos.push_back({{"id", reports[p.report].id}, {"cluster", p.cluster}, {"outer_step", p.outer_step}, {"v", p.v}});
        doc5["promotions"] = promos;
        json events = json::array();
        for (const auto& e : rf.feasibility_events)
            events.push_back({{"cluster", e.cluster},
                              {"id", reports[e.report].id},
                              {"outer_step", e.outer_step},
                              {"subset", universe.labels_of(e.subset)},
                              {"ac", e.ac}});
        doc5["feasibility_events"] = events;
        doc["step5"] = doc5;
    }

    {
        json clusters = json::array();
        for (std::size_t a = 0; a < res.rankings.size(); ++a) {
            json ranking = json::array();
            for (const auto& r : res.rankings[a])
                ranking.push_back(fit_json(r.fit));
            clusters.push_back({{"cluster", a}, {"ranking", ranking}});
        }
        doc["step6"] = {{"clusters", clusters}};
    }

    {
        json elems = json::array();
        for (const auto& fe : res.elements)
            elems.push_back(force_element_json(fe, reports, universe));
        doc["step7"] = {{"force_elements", elems}};
    }
    return doc;
}

inline ScenarioSpec parse_scenario_spec(const json& doc) {
    return detail::guarded("scenario spec", [&] {
        TypeUniverse u = parse_universe(doc);
        ScenarioSpec spec{u, parse_templates(doc, u), doc.at("units").get<std::vector<std::string>>()};
        if (doc.contains("mass")) {
            const auto m = doc.at("mass").get<std::vector<double>>();
            if (m.size() != 2)
                throw ValidationError("mass must be [min, max]");
            spec.mass_min = m[0];
            spec.mass_max = m[1];
        }
        spec.nonspecific_prob = doc.value("nonspecific", 0.0);
        spec.decoys = doc.value("decoys", std::size_t{0});
        return spec;
    });
}

inline json scenario_to_json(const Scenario& sc) {
    json truth = json::array();
    for (const auto& t : sc.truth)
        truth.push_back({{"template", t.template_name}, {"members", t.members}});
    return {{"universe", sc.universe.labels()},
            {"reports", reports_to_json(sc.reports, sc.universe)},
            {"templates", templates_to_json(sc.catalog, sc.universe)},
            {"truth", truth},
            {"seed", sc.seed}};
}

struct LoadedScenario {
    ReportSet set;
    std::vector<Template> catalog;
    std::vector<std::size_t> truth_of;
    std::vector<std::string> truth_templates;
};

inline LoadedScenario parse_scenario(const json& doc) {
    return detail::guarded("scenario", [&] {
        LoadedScenario ls{parse_reports(doc), {}, {}, {}};
        ls.catalog = parse_templates(doc, ls.set.universe);
        const std::size_t n = ls.set.reports.size();
        ls.truth_of.assign(n, SIZE_MAX);
        const auto& truth = doc.at("truth");
        for (std::size_t u = 0; u < truth.size(); ++u) {
            ls.truth_templates.push_back(truth[u].at("template").get<std::string>());
            for (const auto& id : truth[u].at("members"))
                ls.truth_of[index_of_id(ls.set.reports, id.get<std::string>())] = u;
        }
        for (std::size_t i = 0; i < n; ++i)
            if (ls.truth_of[i] == SIZE_MAX)
                throw ValidationError("ground truth misses report '" + ls.set.reports[i].id + "'");
        return ls;
    });
}

inline json eval_json(const EvalReport& e) {
    json matched = json::array();
    for (const auto& m : e.matched_unit)
        matched.push_back(m ? json(*m) : json(nullptr));
    json correct = json::array();
    for (const auto& c : e.template_correct)
        correct.push_back(c ? json(*c) : json(nullptr));
    json doc = {{"misplacements", e.misplacements},
                {"agreement", e.agreement},
                {"matched_unit", matched},
                {"template_correct", correct}};
    if (!e.runtimes_ms.empty()) {
        json rt = json::object();
        for (const auto& [k, v] : e.runtimes_ms)
            rt[k] = v;
        doc["runtimes_ms"] = rt;
    }
    return doc;
}

} // namespace forceagg::io
