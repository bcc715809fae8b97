#include "evtfair/cli.hpp"

#include "evtfair/error.hpp"
#include "evtfair/mitigation.hpp"
#include "evtfair/report.hpp"
#include "evtfair/statcompare.hpp"
#include "evtfair/synthgen.hpp"
#include "evtfair/tailsampler.hpp"
#include "evtfair/version.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace evtfair {

namespace fs = std::filesystem;

namespace {

struct DataArgs {
    std::string data, schema;
};

struct GroupArgs {
    std::string attr, privileged, unprivileged;
    GroupSpec spec() const { return {attr, privileged, unprivileged}; }
};

void add_data(CLI::App* app, DataArgs& a) {
    app->add_option("--data", a.data, "CSV dataset")->required();
    app->add_option("--schema", a.schema, "schema JSON")->required();
}

void add_group(CLI::App* app, GroupArgs& g) {
    app->add_option("--attr", g.attr, "protected attribute")->required();
    app->add_option("--privileged", g.privileged)->required();
    app->add_option("--unprivileged", g.unprivileged)->required();
}

Dataset load(const DataArgs& a) { return load_csv(a.data, Schema::load_json(a.schema)); }

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot read " + p.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Json parse_json_file(const fs::path& p) {
    try {
        return Json::parse(read_text(p));
    } catch (const Json::parse_error& e) {
        fail(ErrorCode::InvalidSchema, p.string() + ": " + e.what());
    }
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) fail(ErrorCode::TypeMismatch, what + ": not a number '" + s + "'");
    return v;
}

// One numeric column; an optional header names it. With `column` set, the
// matching header column is read instead of the first.
std::vector<double> read_values(const fs::path& path, const std::string& column = "") {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::Io, "cannot read " + path.string());
    std::vector<double> out;
    std::string line;
    std::size_t idx = 0;
    bool first = true;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (first) {
            first = false;
            if (!column.empty()) {
                const auto it = std::find(cells.begin(), cells.end(), column);
                if (it == cells.end()) fail(ErrorCode::MissingColumn, "column '" + column + "' not in " + path.string());
                idx = static_cast<std::size_t>(it - cells.begin());
                continue;
            }
            double probe;
            const auto& c = cells.at(0);
            auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), probe);
            if (ec != std::errc() || p != c.data() + c.size()) continue;  // header
        }
        if (idx >= cells.size()) fail(ErrorCode::TypeMismatch, "short row in " + path.string());
        out.push_back(parse_double(cells[idx], path.string()));
    }
    if (out.empty()) fail(ErrorCode::EmptyValues, "no values in " + path.string());
    return out;
}

std::vector<std::uint64_t> parse_periods(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size() || v < 1)
            fail(ErrorCode::InvalidArgument, "bad return period '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) fail(ErrorCode::InvalidArgument, "no return periods");
    return out;
}

ModelPtr make_model(const std::string& spec, const Dataset& data, std::uint64_t seed) {
    if (spec == "builtin:logreg") {
        auto [train, valid, test] = split(data, SplitRatios{}, seed);
        TrainConfig cfg;
        cfg.seed = seed;
        return train_logreg(train, cfg);
    }
    if (spec.rfind("exec:", 0) == 0) return std::make_shared<ExternalModel>(spec.substr(5), data.schema());
    fail(ErrorCode::InvalidArgument, "unknown model '" + spec + "' (builtin:logreg or exec:CMD)");
}

std::string sidecar_name(const fs::path& out, const std::string& role, const char* kind) {
    return out.stem().string() + "." + role + "." + kind + ".csv";
}

struct AuditArgs {
    DataArgs data;
    GroupArgs group;
    std::string model = "builtin:logreg";
    std::string out;
    std::size_t kmin = 10, kmax = 50, m = 1, max_iterations = 100000;
    double timeout = 1200;
    std::uint64_t seed = 0;
    int bootstrap = 200;
    std::string periods = "500,1000,2000";
};

int do_audit(const AuditArgs& a, std::ostream& out) {
    const auto ds = load(a.data);
    const auto group = a.group.spec();
    group.validate(ds);
    AuditConfig cfg;
    cfg.sampler.k_min = a.kmin;
    cfg.sampler.k_max = a.kmax;
    cfg.sampler.m = a.m;
    cfg.sampler.timeout_secs = a.timeout;
    cfg.sampler.seed = a.seed;
    cfg.sampler.max_iterations = a.max_iterations;
    cfg.bootstrap_resamples = a.bootstrap;
    cfg.return_periods = parse_periods(a.periods);

    const auto model = make_model(a.model, ds, a.seed);
    auto report = audit(*model, ds, group, cfg, copula_factory(ds, group));
    report.metadata.dataset_hash = file_hash(a.data.data);

    const fs::path out_path(a.out);
    const auto dir = out_path.parent_path();
    for (const auto* g : {&report.unprivileged, &report.privileged}) {
        if (!g->fit) continue;
        const std::string role = g == &report.unprivileged ? "unprivileged" : "privileged";
        const auto qq = sidecar_name(out_path, role, "qq");
        const auto dens = sidecar_name(out_path, role, "density");
        write_file_atomic(dir / qq, qq_csv(g->qq));
        write_file_atomic(dir / dens, density_csv(*g->fit, g->exceedances));
        report.diagnostics[role + "_qq"] = qq;
        report.diagnostics[role + "_density"] = dens;
    }
    write_file_atomic(out_path, dump_json(to_json(report)));
    out << render_tables(report);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tail-discrimination auditing for tabular classifiers", "evtfair"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    AuditArgs audit_args;
    auto* audit_cmd = app.add_subcommand("audit", "audit a model for extreme counterfactual discrimination");
    add_data(audit_cmd, audit_args.data);
    add_group(audit_cmd, audit_args.group);
    audit_cmd->add_option("--model", audit_args.model, "builtin:logreg or exec:CMD");
    audit_cmd->add_option("--out", audit_args.out, "report JSON")->required();
    audit_cmd->add_option("--kmin", audit_args.kmin);
    audit_cmd->add_option("--kmax", audit_args.kmax);
    audit_cmd->add_option("--m", audit_args.m, "synthetic rows per round");
    audit_cmd->add_option("--timeout", audit_args.timeout, "seconds per group");
    audit_cmd->add_option("--max-iterations", audit_args.max_iterations);
    audit_cmd->add_option("--bootstrap", audit_args.bootstrap, "bootstrap resamples");
    audit_cmd->add_option("--return-periods", audit_args.periods, "comma-separated m values");
    audit_cmd->add_option("--seed", audit_args.seed);

    DataArgs gen_data;
    GroupArgs gen_group;
    std::string gen_target, gen_out;
    std::size_t gen_n = 1000;
    std::uint64_t gen_seed = 0;
    auto* gen_cmd = app.add_subcommand("gen", "sample synthetic rows for one group value");
    add_data(gen_cmd, gen_data);
    add_group(gen_cmd, gen_group);
    gen_cmd->add_option("--target", gen_target, "group value to generate")->required();
    gen_cmd->add_option("--n", gen_n);
    gen_cmd->add_option("--seed", gen_seed);
    gen_cmd->add_option("--out", gen_out, "CSV output")->required();

    DataArgs ge_data;
    std::string ge_synth, ge_test, ge_out;
    std::uint64_t ge_seed = 0;
    auto* ge_cmd = app.add_subcommand("gen-eval", "compare synthetic rows against real rows");
    add_data(ge_cmd, ge_data);
    ge_cmd->add_option("--synth", ge_synth, "synthetic CSV")->required();
    ge_cmd->add_option("--test", ge_test, "held-out CSV for the downstream F1 check")->required();
    ge_cmd->add_option("--seed", ge_seed);
    ge_cmd->add_option("--out", ge_out, "metrics JSON")->required();

    std::string rl_fit, rl_m = "500,1000,2000", rl_out;
    auto* rl_cmd = app.add_subcommand("rl", "return-level table from a fit");
    rl_cmd->add_option("--fit", rl_fit, "fit JSON")->required();
    rl_cmd->add_option("--m", rl_m, "comma-separated m values");
    rl_cmd->add_option("--out", rl_out, "CSV output (default stdout)");

    std::string fit_values, fit_out;
    std::size_t fit_kmax = 50;
    int fit_bootstrap = 200;
    std::uint64_t fit_seed = 0;
    auto* fit_cmd = app.add_subcommand("fit", "fit the tail of a column of values");
    fit_cmd->add_option("--values", fit_values, "CSV with one numeric column")->required();
    fit_cmd->add_option("--kmax", fit_kmax);
    fit_cmd->add_option("--bootstrap", fit_bootstrap);
    fit_cmd->add_option("--seed", fit_seed);
    fit_cmd->add_option("--out", fit_out, "fit JSON")->required();

    DataArgs mit_data;
    GroupArgs mit_group;
    std::string mit_out;
    std::size_t mit_trials = 50;
    double mit_eps = 0.02, mit_timeout = 120;
    std::uint64_t mit_seed = 0;
    auto* mit_cmd = app.add_subcommand("mitigate", "search trainer settings that reduce tail discrimination");
    add_data(mit_cmd, mit_data);
    add_group(mit_cmd, mit_group);
    mit_cmd->add_option("--trials", mit_trials);
    mit_cmd->add_option("--eps-acc", mit_eps, "allowed validation accuracy loss");
    mit_cmd->add_option("--timeout", mit_timeout, "audit timeout per candidate and group");
    mit_cmd->add_option("--seed", mit_seed);
    mit_cmd->add_option("--out", mit_out, "result JSON")->required();

    std::string cmp_a, cmp_b, cmp_metric, cmp_out;
    int cmp_resamples = 1000;
    double cmp_alpha = 0.05;
    std::uint64_t cmp_seed = 0;
    auto* cmp_cmd = app.add_subcommand("compare", "effect size and bootstrap test between two run sets");
    cmp_cmd->add_option("--a", cmp_a, "CSV of runs")->required();
    cmp_cmd->add_option("--b", cmp_b, "CSV of runs")->required();
    cmp_cmd->add_option("--metric", cmp_metric, "column to compare")->required();
    cmp_cmd->add_option("--resamples", cmp_resamples);
    cmp_cmd->add_option("--alpha", cmp_alpha);
    cmp_cmd->add_option("--seed", cmp_seed);
    cmp_cmd->add_option("--out", cmp_out, "result JSON")->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (*audit_cmd) return do_audit(audit_args, out);

        if (*gen_cmd) {
            const auto ds = load(gen_data);
            const auto group = gen_group.spec();
            group.validate(ds);
            const auto gen = fit_generator(ds, group, gen_target);
            std::ostringstream csv;
            write_csv(csv, ds.with_rows(gen.sample(gen_n, gen_seed)));
            write_file_atomic(gen_out, csv.str());
            return 0;
        }

        if (*ge_cmd) {
            const auto real = load(ge_data);
            const auto synth = load_csv(ge_synth, real.schema());
            const auto test = load_csv(ge_test, real.schema());
            const Json j{{"fid", frechet_distance(real, synth)},
                         {"kl", kl_similarity(real, synth)},
                         {"lgd", detection_auc(real, synth, ge_seed)},
                         {"f1_loss", downstream_f1_loss(real, synth, test)}};
            write_file_atomic(ge_out, dump_json(j));
            return 0;
        }

        if (*rl_cmd) {
            const auto fit = fit_from_json(parse_json_file(rl_fit));
            std::string csv = "m,return_level\n";
            char buf[64];
            for (auto m : parse_periods(rl_m)) {
                std::snprintf(buf, sizeof buf, "%llu,%.17g\n", static_cast<unsigned long long>(m),
                              return_level(fit, static_cast<double>(m)));
                csv += buf;
            }
            if (rl_out.empty())
                out << csv;
            else
                write_file_atomic(rl_out, csv);
            return 0;
        }

        if (*fit_cmd) {
            const auto values = read_values(fit_values);
            TailAnalysisOptions opts;
            opts.k_max = fit_kmax;
            opts.bootstrap_resamples = fit_bootstrap;
            opts.seed = fit_seed;
            const auto analysis = analyze_tail(values, opts);
            write_file_atomic(fit_out, dump_json(to_json(analysis.fit)));
            return 0;
        }

        if (*mit_cmd) {
            const auto ds = load(mit_data);
            const auto group = mit_group.spec();
            group.validate(ds);
            auto [train, valid, test] = split(ds, SplitRatios{}, mit_seed);
            MitigationConfig cfg;
            cfg.n_trials = mit_trials;
            cfg.eps_acc = mit_eps;
            cfg.seed = mit_seed;
            cfg.audit.sampler.timeout_secs = mit_timeout;
            const auto result = mitigate(train, valid, test, group, cfg);
            write_file_atomic(mit_out, dump_json(to_json(result)));
            return 0;
        }

        if (*cmp_cmd) {
            const auto a = read_values(cmp_a, cmp_metric);
            const auto b = read_values(cmp_b, cmp_metric);
            const auto r = bootstrap_test(a, b, cmp_resamples, cmp_alpha, cmp_seed);
            write_file_atomic(cmp_out, dump_json(to_json(r)));
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: Internal: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace evtfair
