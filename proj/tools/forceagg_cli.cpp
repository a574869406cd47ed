// forceagg command-line front end.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "forceagg/io.hpp"
#include "forceagg/oracle.hpp"

namespace fa = forceagg;
namespace io = forceagg::io;
using io::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kValidation = 2, kGuard = 3 };

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw fa::ValidationError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw fa::ValidationError("'" + path + "': " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw fa::ValidationError("cannot write '" + path + "'");
    out << text;
}

void write_json(const std::string& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

struct Globals {
    std::optional<std::size_t> k;
    std::optional<std::uint64_t> seed;
    std::optional<double> core_threshold;
    std::optional<std::string> penalty_mode;
    bool restart_on_promotion = false;
    std::string config_file;
    std::string trace_file;
    std::size_t jobs = 1;
};

fa::PipelineConfig resolve_config(const Globals& g) {
    fa::PipelineConfig c;
    if (!g.config_file.empty())
        c = io::parse_config(read_json(g.config_file), c);
    if (g.k)
        c.anneal.k = *g.k;
    if (g.seed)
        c.anneal.seed = *g.seed;
    if (g.core_threshold)
        c.core_threshold = *g.core_threshold;
    if (g.penalty_mode)
        c.penalty_mode = io::parse_penalty_mode(*g.penalty_mode);
    if (g.restart_on_promotion)
        c.restart_on_promotion = true;
    c.anneal.validate();
    return c;
}

io::ReportSet load_reports(const std::string& path, const fa::PipelineConfig& c) {
    auto set = io::parse_reports(read_json(path), c.mass_cap);
    for (const auto& w : set.warnings)
        std::cerr << "warning: " << w << "\n";
    return set;
}

void emit_trace(const Globals& g, std::initializer_list<std::pair<const char*, const std::vector<fa::TraceRecord>*>> phases) {
    if (g.trace_file.empty())
        return;
    std::string text;
    for (const auto& [phase, trace] : phases)
        for (const auto& t : *trace) {
            json rec = {{"phase", phase}};
            rec.update(io::trace_json(t));
            text += rec.dump() + "\n";
        }
    write_text(g.trace_file, text);
}

struct EvalOutcome {
    json doc;
    std::string error;
    int code = kOk;
};

EvalOutcome eval_one(const std::string& path, const Globals& g) {
    EvalOutcome out;
    try {
        const auto loaded = io::parse_scenario(read_json(path));
        auto config = resolve_config(g);
        if (!g.k)
            config.anneal.k = loaded.truth_templates.size();
        const auto& reports = loaded.set.reports;
        const auto res = fa::run_pipeline(reports, loaded.set.universe, loaded.catalog, config);

        std::vector<std::optional<std::string>> chosen(res.refined.partition.k);
        for (std::size_t a = 0; a < chosen.size(); ++a)
            if (a < res.elements.size() && res.elements[a].template_name)
                chosen[a] = *res.elements[a].template_name;

        auto before = fa::evaluate(res.initial.cluster_of, loaded.truth_of);
        auto after = fa::evaluate(res.refined.assignment.cluster_of, loaded.truth_of, chosen, loaded.truth_templates);
        after.runtimes_ms = res.runtimes_ms;

        json monitor = json::array();
        for (std::size_t a = 0; a < res.refined.partition.k; ++a) {
            const auto& members = res.refined.partition.members[a];
            if (members.size() > 10)
                continue;
            std::vector<fa::Report> rs;
            for (auto i : members)
                rs.push_back(reports[i]);
            const double exact = fa::oracle_exact_conflict(rs);
            const double approx = fa::pairwise_conflict(rs);
            monitor.push_back({{"cluster", a}, {"exact", exact}, {"pairwise", approx}, {"gap", std::abs(approx - exact)}});
        }
        out.doc = {{"scenario", path},
                   {"k", config.anneal.k},
                   {"step1", io::eval_json(before)},
                   {"final", io::eval_json(after)},
                   {"conflict_monitor", monitor}};
    } catch (const fa::ValidationError& e) {
        out.error = e.what(), out.code = kValidation;
    } catch (const fa::GuardError& e) {
        out.error = e.what(), out.code = kGuard;
    } catch (const fa::StageError& e) {
        out.error = e.what();
        out.code = e.cause() == fa::StageError::Cause::validation ? kValidation
                   : e.cause() == fa::StageError::Cause::guard    ? kGuard
                                                                  : kFailure;
    } catch (const std::exception& e) {
        out.error = e.what(), out.code = kFailure;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evidence clustering and template-based force aggregation"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--k", g.k, "Number of clusters");
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--core-threshold", g.core_threshold, "Credibility threshold for core membership");
    app.add_option("--penalty-mode", g.penalty_mode, "Template penalty scope: home or all")
        ->check(CLI::IsMember({"home", "all"}));
    app.add_flag("--restart-on-promotion", g.restart_on_promotion, "Restart the schedule after each promotion");
    app.add_option("--config", g.config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--emit-trace", g.trace_file, "Write the annealing trace as line-delimited JSON");
    app.add_option("--jobs", g.jobs, "Concurrent scenario evaluations")->check(CLI::PositiveNumber);

    std::string reports_path, templates_path, assignment_path, spec_path, out_path, what = "energy";
    std::vector<std::string> scenario_paths;

    auto* cluster = app.add_subcommand("cluster", "Standard clustering (step 1)");
    cluster->add_option("--reports", reports_path)->required()->check(CLI::ExistingFile);
    cluster->add_option("-o,--out", out_path);

    auto* pipeline = app.add_subcommand("pipeline", "Steps 1 to 7");
    pipeline->add_option("--reports", reports_path)->required()->check(CLI::ExistingFile);
    pipeline->add_option("--templates", templates_path)->required()->check(CLI::ExistingFile);
    pipeline->add_option("-o,--out", out_path);

    auto* refine = app.add_subcommand("refine", "Steps 2 to 7 from a given assignment");
    refine->add_option("--reports", reports_path)->required()->check(CLI::ExistingFile);
    refine->add_option("--templates", templates_path)->required()->check(CLI::ExistingFile);
    refine->add_option("--assignment", assignment_path)->required()->check(CLI::ExistingFile);
    refine->add_option("-o,--out", out_path);

    auto* gen = app.add_subcommand("gen", "Generate a synthetic scenario");
    gen->add_option("--spec", spec_path)->required()->check(CLI::ExistingFile);
    gen->add_option("-o,--out", out_path);

    auto* oracle = app.add_subcommand("oracle", "Exhaustive reference computations");
    oracle->add_option("--reports", reports_path)->required()->check(CLI::ExistingFile);
    oracle->add_option("--what", what, "energy or conflict")->check(CLI::IsMember({"energy", "conflict"}));
    oracle->add_option("-o,--out", out_path);

    auto* eval = app.add_subcommand("eval", "Run the pipeline on scenarios and score against ground truth");
    eval->add_option("scenarios", scenario_paths)->required()->check(CLI::ExistingFile);
    eval->add_option("-o,--out", out_path);

    auto* config_cmd = app.add_subcommand("config", "Print the effective configuration");
    config_cmd->add_option("-o,--out", out_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (config_cmd->parsed()) {
            write_json(out_path, io::config_to_json(resolve_config(g)));
        } else if (cluster->parsed()) {
            const auto config = resolve_config(g);
            const auto set = load_reports(reports_path, config);
            const auto r = fa::anneal(set.reports, config.anneal);
            emit_trace(g, {{"step1", &r.trace}});
            write_json(out_path, io::cluster_step_json(r, set.reports));
        } else if (pipeline->parsed() || refine->parsed()) {
            const auto config = resolve_config(g);
            const auto set = load_reports(reports_path, config);
            const auto catalog = io::parse_templates(read_json(templates_path), set.universe);
            fa::PipelineResult res;
            if (refine->parsed()) {
                const auto assignment = io::parse_assignment(read_json(assignment_path), set.reports);
                auto cfg = config;
                cfg.anneal.k = assignment.k;
                res = fa::run_from_assignment(set.reports, set.universe, catalog, assignment, cfg);
                emit_trace(g, {{"step5", &res.refined.trace}});
                write_json(out_path, io::pipeline_document(res, set.reports, set.universe, catalog, cfg));
            } else {
                res = fa::run_pipeline(set.reports, set.universe, catalog, config);
                emit_trace(g, {{"step1", &res.step1->trace}, {"step5", &res.refined.trace}});
                write_json(out_path, io::pipeline_document(res, set.reports, set.universe, catalog, config));
            }
        } else if (gen->parsed()) {
            const auto spec = io::parse_scenario_spec(read_json(spec_path));
            write_json(out_path, io::scenario_to_json(fa::generate_scenario(spec, g.seed.value_or(1))));
        } else if (oracle->parsed()) {
            const auto config = resolve_config(g);
            const auto set = load_reports(reports_path, config);
            if (what == "energy") {
                const auto r = fa::oracle_min_energy(set.reports, config.anneal.k);
                json doc = io::assignment_to_json(r.assignment, set.reports);
                doc["energy"] = r.energy;
                write_json(out_path, doc);
            } else {
                write_json(out_path, {{"exact", fa::oracle_exact_conflict(set.reports)},
                                      {"pairwise", fa::pairwise_conflict(set.reports)}});
            }
        } else if (eval->parsed()) {
            std::vector<EvalOutcome> outcomes(scenario_paths.size());
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                for (std::size_t i; (i = next++) < scenario_paths.size();)
                    outcomes[i] = eval_one(scenario_paths[i], g);
            };
            std::vector<std::thread> pool;
            const std::size_t jobs = std::min(g.jobs, scenario_paths.size());
            for (std::size_t t = 1; t < jobs; ++t)
                pool.emplace_back(worker);
            worker();
            for (auto& t : pool)
                t.join();
            json results = json::array();
            int code = kOk;
            for (const auto& o : outcomes) {
                if (o.code != kOk) {
                    std::cerr << "error: " << o.error << "\n";
                    code = std::max(code, o.code);
                    continue;
                }
                results.push_back(o.doc);
            }
            write_json(out_path, {{"results", results}});
            return code;
        }
    } catch (const fa::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const fa::GuardError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return kGuard;
    } catch (const fa::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.cause()) {
        case fa::StageError::Cause::validation: return kValidation;
        case fa::StageError::Cause::guard: return kGuard;
        default: return kFailure;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
