// cak: solve causal models, apply interventions, and check abstraction
// claims from the command line. Reports go to stdout as canonical JSON,
// diagnostics to stderr.
//
// Exit codes: 0 success/verified, 1 verification found violations,
// 2 usage or parse error, 3 budget/runtime error.

#include "cak/dsl.hpp"
#include "cak/errors.hpp"
#include "cak/fixtures.hpp"
#include "cak/interchange.hpp"
#include "cak/approx.hpp"
#include "cak/nn.hpp"
#include "cak/ops.hpp"
#include "cak/scrub.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace cak;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write file: " + path);
    out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Value parse_cli_value(const std::string& text) {
    try {
        json j = json::parse(text);
        if (j.is_number()) return Value(j.get<double>());
        if (j.is_string()) return Value(j.get<std::string>());
        if (j.is_array()) {
            Value::Vec v;
            for (const auto& e : j) v.push_back(e.get<double>());
            return Value(std::move(v));
        }
    } catch (const json::exception&) {
    }
    return Value(text); // bare symbols need no quotes
}

struct LoadedAlignment {
    Alignment alignment;
    std::vector<std::string> induced;
};

LoadedAlignment load_alignment(const std::string& path, const CausalModel& low,
                               const CausalModel& high) {
    auto parsed = dsl::parse_alignment(read_file(path), low.sig(), high.sig());
    if (parsed.induced.empty()) return {parsed.alignment, {}};
    Alignment built =
        build_interchange_alignment(low, high, parsed.alignment, parsed.induced);
    return {built, parsed.induced};
}

Suite load_or_generate_suite(const std::string& suite_path, bool exhaustive,
                             const CausalModel& low, const CausalModel& high,
                             const LoadedAlignment& la) {
    if (!suite_path.empty()) {
        auto items = dsl::parse_suite(read_file(suite_path), low.sig());
        return Suite(std::move(items));
    }
    if (!exhaustive) throw UsageError("provide --suite FILE or --exhaustive");
    if (!la.induced.empty())
        return interchange_domain_suite(low, high, la.alignment, la.induced);
    return cellwise_domain_suite(la.alignment, low.tolerance());
}

json report_to_json(const AbstractionReport& r) {
    return json::parse(dsl::serialize_report(r));
}

int run(int argc, char** argv) {
    CLI::App app{"causal-model abstraction toolkit"};
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs", jobs, "worker threads (0 = hardware)");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "solve a model, optionally intervened");
    std::string solve_model;
    std::vector<std::string> solve_sets;
    solve_cmd->add_option("model", solve_model)->required();
    solve_cmd->add_option("--set", solve_sets, "VAR=VALUE hard intervention");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "check the commuting diagram");
    std::string v_low, v_high, v_align, v_suite;
    bool v_exhaustive = false;
    double v_tolerance = -1.0;
    verify_cmd->add_option("low", v_low)->required();
    verify_cmd->add_option("high", v_high)->required();
    verify_cmd->add_option("align", v_align)->required();
    verify_cmd->add_option("--suite", v_suite);
    verify_cmd->add_flag("--exhaustive", v_exhaustive);
    verify_cmd->add_option("--tolerance", v_tolerance);

    // iia
    auto* iia_cmd = app.add_subcommand("iia", "interchange intervention accuracy");
    std::string i_low, i_high, i_align, i_suite;
    bool i_exhaustive = false;
    iia_cmd->add_option("low", i_low)->required();
    iia_cmd->add_option("high", i_high)->required();
    iia_cmd->add_option("align", i_align)->required();
    iia_cmd->add_option("--suite", i_suite);
    iia_cmd->add_flag("--exhaustive", i_exhaustive);

    // approx
    auto* approx_cmd = app.add_subcommand("approx", "approximate transformation metric");
    std::string a_low, a_high, a_align, a_suite, a_sim = "exact", a_stat = "mean";
    double a_eta = -1.0;
    bool a_has_eta = false;
    approx_cmd->add_option("low", a_low)->required();
    approx_cmd->add_option("high", a_high)->required();
    approx_cmd->add_option("align", a_align)->required();
    approx_cmd->add_option("--suite", a_suite)->required();
    approx_cmd->add_option("--sim", a_sim, "exact | absdiff:VAR | output:V1,V2");
    approx_cmd->add_option("--stat", a_stat, "mean | max | min");
    approx_cmd->add_option("--eta", a_eta)->each([&](const std::string&) { a_has_eta = true; });

    // transform
    auto* transform_cmd = app.add_subcommand("transform", "marginalize / merge / value-merge");
    std::string t_model, t_out, t_value_merge, t_merge;
    std::vector<std::string> t_marginalize;
    transform_cmd->add_option("model", t_model)->required();
    transform_cmd->add_option("--marginalize", t_marginalize, "variables to drop");
    transform_cmd->add_option("--merge", t_merge, "NEW=V1+V2,NEW2=V3 partition");
    transform_cmd->add_option("--value-merge", t_value_merge, "value-merge document");
    transform_cmd->add_option("-o,--output", t_out)->required();

    // decompose
    auto* decompose_cmd = app.add_subcommand("decompose", "three-stage alignment pipeline");
    std::string d_align, d_low, d_high, d_out;
    decompose_cmd->add_option("align", d_align)->required();
    decompose_cmd->add_option("--low", d_low)->required();
    decompose_cmd->add_option("--high", d_high)->required();
    decompose_cmd->add_option("-o,--output", d_out)->required();

    // interchange
    auto* inter_cmd = app.add_subcommand("interchange", "build an interchange intervention");
    std::string ic_model, ic_base, ic_source;
    std::vector<std::string> ic_targets;
    inter_cmd->add_option("model", ic_model)->required();
    inter_cmd->add_option("--base", ic_base)->required();
    inter_cmd->add_option("--source", ic_source)->required();
    inter_cmd->add_option("--targets", ic_targets)->required();

    // mediate
    auto* mediate_cmd = app.add_subcommand("mediate", "total/direct/indirect effects");
    std::string md_model, md_x, md_xp, md_y;
    std::vector<std::string> md_z;
    mediate_cmd->add_option("model", md_model)->required();
    mediate_cmd->add_option("--x", md_x)->required();
    mediate_cmd->add_option("--xprime", md_xp)->required();
    mediate_cmd->add_option("--y", md_y)->required();
    mediate_cmd->add_option("--z", md_z)->required();

    // scrub
    auto* scrub_cmd = app.add_subcommand("scrub", "causal-scrubbing faithfulness");
    std::string sc_low, sc_high, sc_map, sc_pool;
    uint64_t sc_samples = 1000, sc_seed = 0;
    scrub_cmd->add_option("low", sc_low)->required();
    scrub_cmd->add_option("high", sc_high)->required();
    scrub_cmd->add_option("map", sc_map)->required();
    scrub_cmd->add_option("--pool", sc_pool)->required();
    scrub_cmd->add_option("--samples", sc_samples);
    scrub_cmd->add_option("--seed", sc_seed);

    // das
    auto* das_cmd = app.add_subcommand("das", "rotation search over a feature plane");
    std::string das_low, das_high, das_align;
    std::vector<std::string> das_block, das_targets, das_outputs;
    double das_grid = 0.25;
    das_cmd->add_option("low", das_low)->required();
    das_cmd->add_option("high", das_high)->required();
    das_cmd->add_option("align", das_align)->required();
    das_cmd->add_option("--block", das_block)->required();
    das_cmd->add_option("--targets", das_targets)->required();
    das_cmd->add_option("--outputs", das_outputs)->required();
    das_cmd->add_option("--grid", das_grid);

    // fixture
    auto* fixture_cmd = app.add_subcommand("fixture", "write a fixture's dsl documents");
    std::string fx_name, fx_out;
    fixture_cmd->add_option("name", fx_name)->required();
    fixture_cmd->add_option("-o,--output", fx_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    if (*solve_cmd) {
        auto parsed = dsl::parse_model(read_file(solve_model));
        Setting iv(parsed.model.sig());
        for (const auto& assign : solve_sets) {
            auto eq = assign.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects VAR=VALUE");
            iv.set(assign.substr(0, eq), parse_cli_value(assign.substr(eq + 1)));
        }
        auto sols = cak::apply(parsed.model, HardIntervention(iv)).solve();
        std::cout << dsl::serialize_solutions(sols);
        return 0;
    }

    if (*verify_cmd) {
        auto low = dsl::parse_model(read_file(v_low)).model;
        auto high = dsl::parse_model(read_file(v_high)).model;
        auto la = load_alignment(v_align, low, high);
        Suite suite = load_or_generate_suite(v_suite, v_exhaustive, low, high, la);
        VerifyOptions opts;
        opts.jobs = jobs;
        opts.tolerance =
            v_tolerance >= 0 ? v_tolerance : std::max(low.tolerance(), high.tolerance());
        auto report = verify_constructive(low, high, la.alignment, suite, opts);
        std::cout << dsl::serialize_report(report);
        return report.passed ? 0 : 1;
    }

    if (*iia_cmd) {
        auto low = dsl::parse_model(read_file(i_low)).model;
        auto high = dsl::parse_model(read_file(i_high)).model;
        auto la = load_alignment(i_align, low, high);
        IIAConfig cfg;
        cfg.suite = load_or_generate_suite(i_suite, i_exhaustive, low, high, la);
        cfg.jobs = jobs;
        auto res = iia(low, high, la.alignment, cfg);
        json out{{"iia", res.iia}, {"suite_size", res.suite_size}};
        std::cout << dump(out);
        return 0;
    }

    if (*approx_cmd) {
        auto low = dsl::parse_model(read_file(a_low)).model;
        auto high = dsl::parse_model(read_file(a_high)).model;
        auto la = load_alignment(a_align, low, high);
        ApproxConfig cfg;
        cfg.suite = Suite(dsl::parse_suite(read_file(a_suite), low.sig()));
        cfg.jobs = jobs;
        std::string sim_name = a_sim;
        if (a_sim == "exact") {
            cfg.sim = Similarity::exact_match();
        } else if (a_sim.rfind("absdiff:", 0) == 0) {
            cfg.sim = Similarity::abs_diff_on(a_sim.substr(8));
        } else if (a_sim.rfind("output:", 0) == 0) {
            std::vector<std::string> outs;
            std::string rest = a_sim.substr(7);
            size_t pos = 0;
            while (pos != std::string::npos) {
                size_t comma = rest.find(',', pos);
                outs.push_back(rest.substr(pos, comma - pos));
                pos = comma == std::string::npos ? comma : comma + 1;
            }
            cfg.sim = Similarity::output_match(outs);
        } else {
            throw UsageError("unknown --sim: " + a_sim);
        }
        if (a_stat == "mean")
            cfg.stat = Statistic::Mean;
        else if (a_stat == "max")
            cfg.stat = Statistic::Max;
        else if (a_stat == "min")
            cfg.stat = Statistic::Min;
        else
            throw UsageError("unknown --stat: " + a_stat);
        if (a_has_eta) cfg.eta = a_eta;
        auto res = approx_metric(low, high, tau_omega_from(la.alignment, low.tolerance()),
                                 cfg);
        json out{{"metric", res.metric},
                 {"stat", a_stat},
                 {"sim", sim_name},
                 {"suite_size", res.suite_size},
                 {"eta_pass", res.eta_pass ? json(*res.eta_pass) : json(nullptr)}};
        std::cout << dump(out);
        return 0;
    }

    if (*transform_cmd) {
        auto parsed = dsl::parse_model(read_file(t_model));
        int modes = (!t_marginalize.empty()) + (!t_merge.empty()) + (!t_value_merge.empty());
        if (modes != 1)
            throw UsageError("pick exactly one of --marginalize/--merge/--value-merge");
        CausalModel out_model = parsed.model;
        if (!t_marginalize.empty()) {
            out_model = marginalize(parsed.model, t_marginalize).first;
        } else if (!t_merge.empty()) {
            MergePartition p;
            std::stringstream ss(t_merge);
            std::string item;
            while (std::getline(ss, item, ',')) {
                auto eq = item.find('=');
                if (eq == std::string::npos) throw UsageError("--merge expects NEW=V1+V2,...");
                std::vector<std::string> members;
                std::stringstream ms(item.substr(eq + 1));
                std::string mem;
                while (std::getline(ms, mem, '+')) members.push_back(mem);
                p.cells.emplace_back(item.substr(0, eq), members);
            }
            out_model = variable_merge(parsed.model, p).first;
        } else {
            auto family = dsl::parse_value_merge(read_file(t_value_merge), parsed.model.sig());
            out_model = value_merge(parsed.model, family).first;
        }
        CausalModel serializable = dsl::materialize_tables(out_model);
        write_file(t_out, dsl::serialize_model(serializable));
        std::cout << dump(json{{"written", {t_out}}});
        return 0;
    }

    if (*decompose_cmd) {
        auto low = dsl::parse_model(read_file(d_low)).model;
        auto high = dsl::parse_model(read_file(d_high)).model;
        auto la = load_alignment(d_align, low, high);
        auto pipe = decompose_alignment(la.alignment);
        std::filesystem::create_directories(d_out);
        std::vector<std::string> written;
        const char* stage_names[3] = {"stage1_marginalize.align.json",
                                      "stage2_merge.align.json",
                                      "stage3_value_merge.align.json"};
        for (size_t i = 0; i < pipe.stages.size(); ++i) {
            std::string path = d_out + "/" + stage_names[i];
            write_file(path, dsl::serialize_alignment(pipe.stages[i]));
            written.push_back(path);
        }
        std::cout << dump(json{{"written", written}});
        return 0;
    }

    if (*inter_cmd) {
        auto parsed = dsl::parse_model(read_file(ic_model));
        InterchangeSpec spec;
        spec.base = dsl::parse_setting(read_file(ic_base), parsed.model.sig());
        spec.sources = {dsl::parse_setting(read_file(ic_source), parsed.model.sig())};
        spec.targets = {ic_targets};
        HardIntervention patch = interchange(parsed.model, spec);
        auto sol = cak::apply(parsed.model,
                              HardIntervention(spec.base.overwritten_by(patch.values)))
                       .solve();
        json out;
        out["intervention"] = json::parse(dsl::serialize_setting(patch.values))["set"];
        out["patched_solutions"] = json::parse(dsl::serialize_solutions(sol))["solutions"];
        std::cout << dump(out);
        return 0;
    }

    if (*mediate_cmd) {
        auto parsed = dsl::parse_model(read_file(md_model));
        Setting x = dsl::parse_setting(read_file(md_x), parsed.model.sig());
        Setting xp = dsl::parse_setting(read_file(md_xp), parsed.model.sig());
        auto t = mediation_effects(parsed.model, x, xp, {md_y}, md_z);
        json out{{"total", t.total}, {"direct", t.direct}, {"indirect", t.indirect}};
        std::cout << dump(out);
        return 0;
    }

    if (*scrub_cmd) {
        ScrubSetup s;
        s.low = dsl::parse_model(read_file(sc_low)).model;
        s.high = dsl::parse_model(read_file(sc_high)).model;
        s.var_map = dsl::parse_var_map(read_file(sc_map));
        for (const auto& iv : dsl::parse_suite(read_file(sc_pool), s.low.sig()))
            s.pool.push_back(iv->hard_part().values);
        for (VarId v : model_outputs(s.low)) s.outputs.push_back(s.low.sig()->name(v));
        auto rep = scrub_faithfulness(s, sc_samples, sc_seed, jobs);
        json out{{"faithfulness", rep.faithfulness},
                 {"samples", rep.samples},
                 {"seed", rep.seed},
                 {"empty_conditioned", json::array()}};
        std::cout << dump(out);
        return 0;
    }

    if (*das_cmd) {
        auto low = dsl::parse_model(read_file(das_low)).model;
        auto high = dsl::parse_model(read_file(das_high)).model;
        auto la = load_alignment(das_align, low, high);
        DasConfig cfg;
        cfg.block = das_block;
        cfg.grid_step_deg = das_grid;
        cfg.high_targets = das_targets;
        cfg.high_outputs = das_outputs;
        for (size_t j = 0; j < das_targets.size(); ++j)
            cfg.feature_coords.push_back({static_cast<int>(j)});
        cfg.jobs = jobs;
        auto low_inputs = enumerate_low_inputs(low, la.alignment);
        std::vector<Setting> high_inputs;
        for (const auto& li : low_inputs) {
            Setting hi(high.sig());
            for (VarId h = 0; h < high.sig()->size(); ++h) {
                bool is_input_cell = true;
                for (VarId v : la.alignment.cell(h))
                    if (!li.has(v)) is_input_cell = false;
                if (!is_input_cell) continue;
                auto val =
                    la.alignment.map(h).apply(li, la.alignment.cell(h), low.tolerance());
                if (val) hi.set(h, *val);
            }
            high_inputs.push_back(std::move(hi));
        }
        auto res = das_search(low, high, low_inputs, high_inputs, cfg);
        json out{{"angle_deg", res.angle_deg}, {"loss", res.loss}};
        std::cout << dump(out);
        return 0;
    }

    if (*fixture_cmd) {
        std::filesystem::create_directories(fx_out);
        std::vector<std::string> written;
        for (const auto& doc : fixtures::fixture_documents(fx_name)) {
            std::string path = fx_out + "/" + doc.filename;
            write_file(path, doc.text);
            written.push_back(path);
        }
        std::cout << dump(json{{"written", written}});
        return 0;
    }

    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const TypeError& e) {
        std::cerr << "type error: " << e.what() << "\n";
        return 2;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 3;
    } catch (const CakError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
