// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "forceagg/evaluate.hpp"
#include "forceagg/io.hpp"
#include "forceagg/oracle.hpp"
#include "forceagg/pipeline.hpp"
#include "forceagg/scenario.hpp"
#include "reference.hpp"

using namespace forceagg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

const std::vector<std::string> kLabels{"X", "Y", "Z"};
const TypeUniverse kXYZ(kLabels);

// Worked example: template X:4, Y:2, Z:2; five core reports, four non-core.
struct Worked {
    Template t = make_template("T1", kXYZ, {{"X", 4}, {"Y", 2}, {"Z", 2}});
    std::vector<Report> core{make_report("C1", Proposition::of(kXYZ, {"X"}), 0.9, 2),
                             make_report("C2", Proposition::of(kXYZ, {"X", "Z"}), 0.8),
                             make_report("C3", Proposition::of(kXYZ, {"Y"}), 0.9),
                             make_report("C4", Proposition::of(kXYZ, {"Y"}), 0.85),
                             make_report("C5", Proposition::of(kXYZ, {"Z"}), 0.9)};
    std::vector<Report> non_core{make_report("NC6", Proposition::of(kXYZ, {"Y"}), 0.6),
                                 make_report("NC7", Proposition::of(kXYZ, {"X"}), 0.6),
                                 make_report("NC8", Proposition::of(kXYZ, {"X", "Y"}), 0.5),
                                 make_report("NC9", Proposition::of(kXYZ, {"Z"}), 0.7, 2)};
};

std::vector<std::int64_t> column(const SupportFunction& f) {
    std::vector<std::int64_t> out;
    for (auto x : subset_order(f.universe_size()))
        out.push_back(f(x));
    return out;
}

std::string show(const std::vector<std::int64_t>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
}

std::vector<reference::Item> ref_items(std::span<const Report> rs, const TypeUniverse& u) {
    std::vector<reference::Item> out;
    for (const auto& r : rs) {
        const auto ls = u.labels_of(r.proposition.mask());
        out.push_back({reference::Labels(ls.begin(), ls.end()), r.count});
    }
    return out;
}

std::vector<reference::Slot> ref_slots(const Template& t, const TypeUniverse& u) {
    std::vector<reference::Slot> out;
    for (const auto& s : t.slots)
        out.push_back({u.label(s.type), s.count});
    return out;
}

Outcome worked_supports() {
    const Worked w;
    const auto t0 = Clock::now();
    const auto st = template_support(w.t, kXYZ);
    const auto sc = evidence_support(w.core, kXYZ);
    const auto ac = admissible(st, sc).ac;
    const double elapsed = ms_since(t0);
    const std::vector<std::int64_t> st_want{4, 2, 2, 6, 6, 4, 8}, sc_want{2, 2, 1, 4, 4, 3, 6}, ac_want{2, 0, 1, 2, 2, 1, 2};
    const bool ok = column(st) == st_want && column(sc) == sc_want && column(ac) == ac_want && elapsed < 1.0;
    return {ok, "ST=" + show(column(st)) + " SC=" + show(column(sc)) + " AC=" + show(column(ac)) + " in " +
                    std::to_string(elapsed) + " ms"};
}

Outcome fit_values() {
    const Worked w;
    const auto f = fit(w.t, evidence_support(w.core, kXYZ), template_support(w.t, kXYZ));
    const bool ok = f.feasible && f.mu1 == Ratio(1, 2) && f.mu2 == Ratio(6, 8) && f.mu == Ratio(5, 8);
    return {ok, "mu1=" + f.mu1.str() + " mu2=" + f.mu2.str() + " mu=" + f.mu.str()};
}

Outcome non_core_support() {
    const Worked w;
    // Reference evaluation first, then the library.
    std::vector<std::int64_t> snc_ref, nac_ref;
    const auto slots = ref_slots(w.t, kXYZ);
    const auto core = ref_items(w.core, kXYZ), nc = ref_items(w.non_core, kXYZ);
    for (const auto& x : reference::ordered_subsets(kLabels)) {
        snc_ref.push_back(reference::support(nc, x));
        nac_ref.push_back(reference::nac(slots, core, nc, x));
    }
    const std::vector<std::int64_t> snc_want{1, 1, 2, 3, 3, 3, 5}, nac_want{0, 1, 1, 1, 1, 2, 3};

    const auto snc = evidence_support(w.non_core, kXYZ);
    const auto nac = inadmissible(snc, admissible(template_support(w.t, kXYZ), evidence_support(w.core, kXYZ)).ac);
    const bool ok = snc_ref == snc_want && nac_ref == nac_want && column(snc) == snc_ref && column(nac) == nac_ref;
    return {ok, "reference SNC=" + show(snc_ref) + " NAC=" + show(nac_ref) + "; library SNC=" + show(column(snc)) +
                    " NAC=" + show(column(nac))};
}

Outcome beliefs() {
    const Worked w;
    const auto slots = ref_slots(w.t, kXYZ);
    const auto core = ref_items(w.core, kXYZ), nc = ref_items(w.non_core, kXYZ);
    std::vector<std::size_t> core_idx, nc_idx;
    std::vector<Report> all = w.core;
    all.insert(all.end(), w.non_core.begin(), w.non_core.end());
    for (std::size_t i = 0; i < w.core.size(); ++i)
        core_idx.push_back(i);
    for (std::size_t i = 0; i < w.non_core.size(); ++i)
        nc_idx.push_back(w.core.size() + i);
    const auto lib = non_core_beliefs(all, core_idx, nc_idx, w.t, kXYZ);
    const std::vector<Ratio> want{Ratio(1), Ratio(0), Ratio(1, 3), Ratio(1, 2)};
    bool ok = lib.size() == want.size();
    std::string detail;
    for (std::size_t q = 0; ok && q < want.size(); ++q) {
        const auto r = reference::belief_not_in(slots, core, nc, nc[q].types);
        ok = ok && Ratio(r.num, r.den) == want[q] && lib[q] == want[q];
        detail += w.non_core[q].id + "=" + lib[q].str() + " ";
    }
    return {ok, detail};
}

Outcome nac_bounded() {
    std::mt19937_64 g(20240601);
    std::size_t violations = 0, checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n_types = 1 + g() % 6;
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < n_types; ++i)
            labels.push_back(std::string(1, static_cast<char>('A' + i)));
        const TypeUniverse u(labels);
        std::vector<std::pair<std::string, std::int64_t>> sl;
        for (const auto& l : labels)
            if (g() % 3 != 0)
                sl.emplace_back(l, 1 + static_cast<std::int64_t>(g() % 5));
        if (sl.empty())
            sl.emplace_back(labels[0], 1);
        const auto t = make_template("t", u, sl);
        auto draw = [&](std::size_t count) {
            std::vector<Report> rs;
            for (std::size_t i = 0; i < count; ++i)
                rs.push_back(make_report("r" + std::to_string(i),
                                         Proposition::from_mask(u, static_cast<TypeMask>(1 + g() % u.full_mask())), 0.7,
                                         1 + static_cast<std::int64_t>(g() % 3)));
            return rs;
        };
        const auto core = draw(g() % 8), non_core = draw(g() % 8);
        const auto snc = evidence_support(non_core, u);
        const auto nac = inadmissible(snc, admissible(template_support(t, u), evidence_support(core, u)).ac);
        for (TypeMask x = 1; x <= u.full_mask(); ++x, ++checked)
            if (nac(x) > snc(x))
                ++violations;
    }
    return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(checked) + " subsets"};
}

Outcome oracle_equivalence() {
    const TypeUniverse u({"A", "B", "C", "D"});
    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> mass(0.1, 0.95);
    std::size_t hits = 0;
    double slowest = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + g() % 7, k = 2 + g() % 2;
        std::vector<Report> rs;
        for (std::size_t i = 0; i < n; ++i) {
            TypeMask m = (g() % 10 < 7) ? TypeMask{1} << (g() % 4) : static_cast<TypeMask>(1 + g() % u.full_mask());
            rs.push_back(make_report("r" + std::to_string(i), Proposition::from_mask(u, m), mass(g)));
        }
        AnnealConfig c;
        c.k = k;
        c.seed = 100 + static_cast<std::uint64_t>(trial);
        const auto t0 = Clock::now();
        const auto j = build_conflict_matrix(rs);
        const auto r = anneal(j, c);
        slowest = std::max(slowest, ms_since(t0));
        const auto best = oracle_min_energy(j, k);
        if (energy(r.assignment, j) <= best.energy + 1e-9 * std::max(1.0, best.energy))
            ++hits;
    }
    const bool ok = hits >= 45 && slowest < 1000.0;
    return {ok, std::to_string(hits) + "/50 at the optimum (need 45); slowest " + std::to_string(slowest) + " ms"};
}

// Every nonspecific report can go to exactly one unit: its own is the only
// unit with room left for a type in its proposition.
bool templates_determine_membership(const Scenario& sc) {
    const std::size_t units = sc.truth.size();
    std::vector<std::vector<std::int64_t>> open(units, std::vector<std::int64_t>(sc.universe.size(), 0));
    for (std::size_t u = 0; u < units; ++u)
        for (const auto& s : sc.catalog[u].slots)
            open[u][s.type] += s.count;
    for (std::size_t i = 0; i < sc.reports.size(); ++i)
        if (sc.reports[i].proposition.mask() == (TypeMask{1} << sc.true_type[i]))
            --open[sc.truth_of[i]][sc.true_type[i]];
    for (std::size_t i = 0; i < sc.reports.size(); ++i) {
        const TypeMask p = sc.reports[i].proposition.mask();
        if (p == (TypeMask{1} << sc.true_type[i]))
            continue;
        for (std::size_t u = 0; u < units; ++u) {
            bool room = false;
            for (std::size_t b = 0; b < sc.universe.size(); ++b)
                if ((p & (TypeMask{1} << b)) && open[u][b] > 0)
                    room = true;
            if (room != (u == sc.truth_of[i]))
                return false;
        }
    }
    return true;
}

double median(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? static_cast<double>(v[n / 2]) : (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0;
}

Outcome refinement_corrects() {
    const TypeUniverse u({"A", "B", "C", "D"});
    const auto t0 = Clock::now();
    std::mt19937_64 g(11);
    std::vector<std::size_t> before, after;
    std::size_t improved = 0, tried = 0;
    while (before.size() < 20 && tried < 5000) {
        ++tried;
        const std::size_t units = 3 + g() % 2;
        ScenarioSpec spec{u, {}, {}, 0.6, 0.95, 0.0, 1 + g() % 3};
        for (std::size_t k = 0; k < units; ++k) {
            spec.catalog.push_back(make_template("unit" + std::to_string(k), u,
                                                 {{u.label(k), 3 + static_cast<std::int64_t>(g() % 4)}}));
            spec.units.push_back(spec.catalog.back().name);
        }
        const auto sc = generate_scenario(spec, g());
        if (!templates_determine_membership(sc))
            continue;
        PipelineConfig config;
        config.anneal.k = units;
        config.anneal.seed = sc.seed;
        const auto res = run_pipeline(sc.reports, sc.universe, sc.catalog, config);
        const auto first = evaluate(res.step1->assignment.cluster_of, sc.truth_of).misplacements;
        if (first == 0)
            continue;
        const auto last = evaluate(res.refined.assignment.cluster_of, sc.truth_of).misplacements;
        before.push_back(first);
        after.push_back(last);
        if (last < first)
            ++improved;
    }
    const double elapsed = ms_since(t0);
    const std::size_t total_before = std::accumulate(before.begin(), before.end(), std::size_t{0});
    const std::size_t total_after = std::accumulate(after.begin(), after.end(), std::size_t{0});
    const bool ok = before.size() == 20 && improved >= 16 && median(after) <= median(before) && elapsed < 30000.0;
    std::ostringstream os;
    os << improved << "/" << before.size() << " improved (need 16); misplacements " << total_before << " -> "
       << total_after << "; median " << median(before) << " -> " << median(after) << "; " << tried
       << " scenarios drawn; " << elapsed << " ms";
    return {ok, os.str()};
}

Outcome reduction() {
    const TypeUniverse u({"A", "B", "C"});
    std::mt19937_64 g(41);
    std::size_t same = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 4 + g() % 10, k = 2 + g() % 3;
        std::vector<Report> rs;
        for (std::size_t i = 0; i < n; ++i)
            rs.push_back(make_report("r" + std::to_string(i),
                                     Proposition::from_mask(u, static_cast<TypeMask>(1 + g() % u.full_mask())),
                                     0.1 + 0.85 * static_cast<double>(g() % 1000) / 1000.0));
        const auto j = build_conflict_matrix(rs);
        RefineConfig rc;
        rc.anneal.k = k;
        rc.anneal.seed = 500 + static_cast<std::uint64_t>(trial);
        CorePartition cores;
        cores.core.assign(k, {});
        cores.non_core.assign(k, {});
        for (std::size_t i = 0; i < n; ++i)
            cores.non_core[g() % k].push_back(i);
        const std::vector<std::optional<Template>> none(k);
        const auto refined = refined_cluster(rs, j, cores, none, u, rc);
        const auto plain = anneal(j, rc.anneal);
        if (refined.assignment.cluster_of == plain.assignment.cluster_of)
            ++same;
    }
    return {same == 20, std::to_string(same) + "/20 identical"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + FORCEAGG_CLI + "\" " + args;
    return std::system(cmd.c_str());
}

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / ("forceagg_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

Outcome constants() {
    const auto out = scratch_dir() / "config.json";
    if (run_cli("config -o \"" + out.string() + "\"") != 0)
        return {false, "config dump failed"};
    const auto doc = nlohmann::json::parse(slurp(out));
    const auto& a = doc.at("alpha_by_k");
    const bool ok = doc.at("epsilon") == 0.001 && doc.at("tau") == 0.9 && doc.at("gamma") == 0.5 &&
                    doc.at("inner_tol") == 0.01 && doc.at("freeze_tol") == 0.99 && a.at("8") == 1e-6 &&
                    a.at("10") == 3e-7 && a.at("11") == 3e-8;
    std::ostringstream os;
    os << "epsilon=" << doc.at("epsilon") << " tau=" << doc.at("tau") << " gamma=" << doc.at("gamma")
       << " alpha(8,10,11)=" << a.at("8") << "," << a.at("10") << "," << a.at("11")
       << " inner_tol=" << doc.at("inner_tol") << " freeze_tol=" << doc.at("freeze_tol");
    return {ok, os.str()};
}

Outcome determinism() {
    const auto dir = scratch_dir();
    const std::string data = FORCEAGG_DATA;
    const std::string in = "--reports \"" + data + "/example_reports.json\" --templates \"" + data +
                           "/example_templates.json\"";
    std::vector<std::string> docs;
    for (int run = 0; run < 2; ++run) {
        const auto out = dir / ("pipeline" + std::to_string(run) + ".json");
        if (run_cli("--k 2 --seed 7 pipeline " + in + " -o \"" + out.string() + "\"") != 0)
            return {false, "pipeline run failed"};
        docs.push_back(slurp(out));
    }
    const bool ok = !docs[0].empty() && docs[0] == docs[1];
    return {ok, std::to_string(docs[0].size()) + " bytes, " + (ok ? "identical" : "different")};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"worked example supports", worked_supports},
        {"template fit", fit_values},
        {"non-core support tables", non_core_support},
        {"basic beliefs", beliefs},
        {"inadmissible support bounded", nac_bounded},
        {"annealer reaches exhaustive optimum", oracle_equivalence},
        {"refinement corrects misplacements", refinement_corrects},
        {"refinement reduces to annealing", reduction},
        {"annealing constants", constants},
        {"pipeline determinism", determinism},
    };
    int failed = 0;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[c].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %2zu %s: %s (%.1f ms)\n", o.pass ? "PASS" : "FAIL", c + 1, criteria[c].first.c_str(),
                    o.detail.c_str(), ms_since(t0));
        if (!o.pass)
            ++failed;
    }
    std::error_code ec;
    fs::remove_all(scratch_dir(), ec);
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
