#include "evtfair/report.hpp"

#include "evtfair/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace evtfair {

namespace {

void dump_number(std::string& out, double v) {
    if (!std::isfinite(v)) {
        out += "null";
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
    // Keep floats recognisable as floats on the way back in.
    if (std::string_view(buf).find_first_of(".eEn") == std::string_view::npos) out += ".0";
}

void dump_rec(std::string& out, const Json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    const std::string close(static_cast<std::size_t>(indent), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += pad + Json(k).dump() + ": ";
                dump_rec(out, v, indent + 2);
            }
            out += "\n" + close + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += pad;
                dump_rec(out, j[i], indent + 2);
            }
            out += "\n" + close + "]";
            return;
        }
        case Json::value_t::number_float:
            dump_number(out, j.get<double>());
            return;
        default:
            out += j.dump();
    }
}

double num(const Json& j) {
    if (j.is_null()) return std::nan("");
    return j.get<double>();
}

Json num_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <class T>
Json opt(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

std::optional<double> opt_num(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key))
        fail(ErrorCode::InvalidSchema, std::string("missing field '") + key + "'");
    return j.at(key);
}

Json to_json(const QqDiagnostic& qq) {
    Json pts = Json::array();
    for (const auto& [e, t] : qq.points) pts.push_back(Json::array({e, t}));
    return Json{{"class", to_string(qq.cls)}, {"r2", qq.r2}, {"points", pts}};
}

QqDiagnostic qq_from_json(const Json& j) {
    QqDiagnostic qq;
    qq.cls = qq_class_from_string(field(j, "class").get<std::string>());
    qq.r2 = num(field(j, "r2"));
    for (const auto& p : field(j, "points")) qq.points.emplace_back(num(p.at(0)), num(p.at(1)));
    return qq;
}

Json to_json(const GroupTailReport& g) {
    Json rl = Json::object();
    for (const auto& [m, v] : g.return_levels) rl[std::to_string(m)] = num_or_null(v);
    Json j{{"value", g.group_value},
           {"status", to_string(g.status)},
           {"failure", g.failure.empty() ? Json(nullptr) : Json(g.failure)},
           {"n_real", g.n_real},
           {"n_synthetic", g.n_synthetic},
           {"iterations", g.iterations},
           {"passed_cv", g.passed_cv},
           {"acd", g.acd},
           {"cvar", g.cvar},
           {"fit", g.fit ? to_json(*g.fit) : Json(nullptr)},
           {"return_levels", rl},
           {"exceedances", g.exceedances},
           {"qq", g.fit ? to_json(g.qq) : Json(nullptr)}};
    return j;
}

GroupTailReport group_from_json(const Json& j) {
    GroupTailReport g;
    g.group_value = field(j, "value").get<std::string>();
    g.status = tail_status_from_string(field(j, "status").get<std::string>());
    if (!field(j, "failure").is_null()) g.failure = j.at("failure").get<std::string>();
    g.n_real = field(j, "n_real").get<std::size_t>();
    g.n_synthetic = field(j, "n_synthetic").get<std::size_t>();
    g.iterations = field(j, "iterations").get<std::size_t>();
    g.passed_cv = field(j, "passed_cv").get<bool>();
    g.acd = num(field(j, "acd"));
    g.cvar = num(field(j, "cvar"));
    if (!field(j, "fit").is_null()) g.fit = fit_from_json(j.at("fit"));
    for (const auto& [k, v] : field(j, "return_levels").items()) g.return_levels[std::stoull(k)] = num(v);
    for (const auto& v : field(j, "exceedances")) g.exceedances.push_back(num(v));
    if (!field(j, "qq").is_null()) g.qq = qq_from_json(j.at("qq"));
    return g;
}

Json to_json(const AuditConfig& c) {
    return Json{{"k_min", c.sampler.k_min},
                {"k_max", c.sampler.k_max},
                {"m", c.sampler.m},
                {"timeout_secs", c.sampler.timeout_secs},
                {"seed", c.sampler.seed},
                {"max_iterations", c.sampler.max_iterations},
                {"bootstrap_resamples", c.bootstrap_resamples},
                {"cvar_alpha", c.cvar_alpha},
                {"return_periods", c.return_periods}};
}

AuditConfig audit_config_from_json(const Json& j) {
    AuditConfig c;
    c.sampler.k_min = field(j, "k_min").get<std::size_t>();
    c.sampler.k_max = field(j, "k_max").get<std::size_t>();
    c.sampler.m = field(j, "m").get<std::size_t>();
    c.sampler.timeout_secs = num(field(j, "timeout_secs"));
    c.sampler.seed = field(j, "seed").get<std::uint64_t>();
    c.sampler.max_iterations = field(j, "max_iterations").get<std::size_t>();
    c.bootstrap_resamples = field(j, "bootstrap_resamples").get<int>();
    c.cvar_alpha = num(field(j, "cvar_alpha"));
    c.return_periods = field(j, "return_periods").get<std::vector<std::uint64_t>>();
    return c;
}

Json to_json(const ModelMetrics& m) {
    return Json{{"accuracy", m.accuracy}, {"aod", m.aod},           {"eod", m.eod},          {"spd", m.spd},
                {"di", opt(m.di)},         {"ecd", opt(m.ecd)},      {"acd_diff", m.acd_diff}};
}

std::string fmt(double v, const char* spec = "%.4g") {
    if (!std::isfinite(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::string dump_json(const Json& j) {
    std::string out;
    dump_rec(out, j, 0);
    out += "\n";
    return out;
}

Json to_json(const EvtFit& f) {
    return Json{{"u", f.u},
                {"zeta_u", f.zeta_u},
                {"k", f.k},
                {"n", f.n},
                {"gpd", {{"sigma_hat", f.gpd.sigma_hat}, {"xi", f.gpd.xi}}},
                {"gev", {{"mu", f.gev.mu}, {"sigma", f.gev.sigma}, {"xi", f.gev.xi}}},
                {"se",
                 {{"gpd_sigma_hat", num_or_null(f.se.gpd_sigma_hat)},
                  {"gpd_xi", num_or_null(f.se.gpd_xi)},
                  {"gev_mu", num_or_null(f.se.gev_mu)},
                  {"gev_sigma", num_or_null(f.se.gev_sigma)},
                  {"gev_xi", num_or_null(f.se.gev_xi)}}},
                {"tail_type", to_string(f.tail_type)},
                {"qq_class", to_string(f.qq_class)},
                {"qq_r2", num_or_null(f.qq_r2)},
                {"horizon", f.horizon.to_string()}};
}

EvtFit fit_from_json(const Json& j) {
    try {
        EvtFit f;
        f.u = num(field(j, "u"));
        f.zeta_u = num(field(j, "zeta_u"));
        f.k = field(j, "k").get<std::size_t>();
        f.n = j.contains("n") ? j.at("n").get<std::size_t>() : 0;
        const auto& gpd = field(j, "gpd");
        f.gpd = {num(field(gpd, "sigma_hat")), num(field(gpd, "xi"))};
        const auto& gev = field(j, "gev");
        f.gev = {num(field(gev, "mu")), num(field(gev, "sigma")), num(field(gev, "xi"))};
        if (j.contains("se")) {
            const auto& se = j.at("se");
            const auto get = [&se](const char* k) { return se.contains(k) ? num(se.at(k)) : 0.0; };
            f.se = {get("gpd_sigma_hat"), get("gpd_xi"), get("gev_mu"), get("gev_sigma"), get("gev_xi")};
        }
        f.tail_type = tail_type_from_string(field(j, "tail_type").get<std::string>());
        f.qq_class = qq_class_from_string(field(j, "qq_class").get<std::string>());
        f.qq_r2 = j.contains("qq_r2") ? num(j.at("qq_r2")) : 0.0;
        const auto& h = field(j, "horizon");
        f.horizon = Horizon::parse(h.is_string() ? h.get<std::string>() : std::to_string(h.get<std::uint64_t>()));
        return f;
    } catch (const Json::exception& e) {
        fail(ErrorCode::InvalidSchema, std::string("bad fit document: ") + e.what());
    }
}

Json to_json(const TrainConfig& c) {
    return Json{{"learning_rate", c.learning_rate},
                {"l2", c.l2},
                {"epochs", c.epochs},
                {"class_weight", c.class_weight},
                {"seed", c.seed}};
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig c;
    c.learning_rate = num(field(j, "learning_rate"));
    c.l2 = num(field(j, "l2"));
    c.epochs = field(j, "epochs").get<int>();
    c.class_weight = num(field(j, "class_weight"));
    c.seed = field(j, "seed").get<std::uint64_t>();
    return c;
}

Json to_json(const AuditReport& r) {
    Json meta{{"tool_version", r.metadata.tool_version},
              {"dataset_hash", r.metadata.dataset_hash},
              {"model_id", r.metadata.model_id},
              {"group",
               {{"attribute", r.group.attribute},
                {"privileged", r.group.privileged_value},
                {"unprivileged", r.group.unprivileged_value}}},
              {"config", to_json(r.config)}};
    Json diag = Json::object();
    for (const auto& [k, v] : r.diagnostics) diag[k] = v;
    return Json{{"metadata", meta},
                {"groups", {{"unprivileged", to_json(r.unprivileged)}, {"privileged", to_json(r.privileged)}}},
                {"acd_diff", r.acd_diff},
                {"cvar_diff", r.cvar_diff},
                {"ecd", opt(r.ecd)},
                {"ecd_degenerate", r.ecd_degenerate},
                {"discriminates", r.discriminates},
                {"diagnostics", diag}};
}

AuditReport audit_report_from_json(const Json& j) {
    try {
        AuditReport r;
        const auto& meta = field(j, "metadata");
        r.metadata.tool_version = field(meta, "tool_version").get<std::string>();
        r.metadata.dataset_hash = field(meta, "dataset_hash").get<std::string>();
        r.metadata.model_id = field(meta, "model_id").get<std::string>();
        const auto& g = field(meta, "group");
        r.group = {field(g, "attribute").get<std::string>(), field(g, "privileged").get<std::string>(),
                   field(g, "unprivileged").get<std::string>()};
        r.config = audit_config_from_json(field(meta, "config"));
        const auto& groups = field(j, "groups");
        r.unprivileged = group_from_json(field(groups, "unprivileged"));
        r.privileged = group_from_json(field(groups, "privileged"));
        r.acd_diff = num(field(j, "acd_diff"));
        r.cvar_diff = num(field(j, "cvar_diff"));
        r.ecd = opt_num(field(j, "ecd"));
        r.ecd_degenerate = field(j, "ecd_degenerate").get<bool>();
        r.discriminates = field(j, "discriminates").get<bool>();
        for (const auto& [k, v] : field(j, "diagnostics").items()) r.diagnostics[k] = v.get<std::string>();
        return r;
    } catch (const Json::exception& e) {
        fail(ErrorCode::InvalidSchema, std::string("bad report document: ") + e.what());
    }
}

Json to_json(const MitigationResult& r) {
    Json trials = Json::array();
    for (const auto& t : r.trials)
        trials.push_back(Json{{"index", t.index},
                              {"config", to_json(t.config)},
                              {"objective", num_or_null(t.objective)},
                              {"feasible", t.feasible},
                              {"valid", to_json(t.valid)}});
    return Json{{"baseline_config", to_json(r.baseline_config)},
                {"best_config", to_json(r.best_config)},
                {"best_trial", r.best_trial},
                {"no_feasible_candidate", r.no_feasible_candidate},
                {"baseline", to_json(r.baseline)},
                {"best", to_json(r.best)},
                {"accuracy_loss", r.baseline.accuracy - r.best.accuracy},
                {"trials", trials}};
}

Json to_json(const ComparisonResult& r) {
    return Json{{"cliffs_delta", r.cliffs_delta},
                {"magnitude", to_string(r.magnitude)},
                {"bootstrap_ci", Json::array({r.bootstrap_ci.first, r.bootstrap_ci.second})},
                {"significant", r.significant}};
}

std::string render_tables(const AuditReport& r) {
    std::ostringstream out;
    char line[256];
    out << "EVT characteristics (" << r.group.attribute << ")\n";
    std::snprintf(line, sizeof line, "%-14s %-12s %-10s %8s %8s %9s %9s %9s %9s %9s %-8s %-11s %-8s\n", "group",
                  "value", "status", "n_real", "n_synth", "ACD", "CVaR", "mu", "sigma", "xi", "type", "Q-Q", "B");
    out << line;
    for (const auto* g : {&r.unprivileged, &r.privileged}) {
        const char* role = g == &r.unprivileged ? "unprivileged" : "privileged";
        std::snprintf(line, sizeof line, "%-14s %-12s %-10s %8zu %8zu %9s %9s ", role, g->group_value.c_str(),
                      std::string(to_string(g->status)).c_str(), g->n_real, g->n_synthetic, fmt(g->acd).c_str(),
                      fmt(g->cvar).c_str());
        out << line;
        if (g->fit) {
            const auto& f = *g->fit;
            std::snprintf(line, sizeof line, "%9s %9s %9s %-8s %-11s %-8s\n", fmt(f.gev.mu).c_str(),
                          fmt(f.gev.sigma).c_str(), fmt(f.gpd.xi).c_str(), std::string(to_string(f.tail_type)).c_str(),
                          std::string(to_string(f.qq_class)).c_str(), f.horizon.to_string().c_str());
            out << line;
        } else if (g->status == TailStatus::Degenerate) {
            out << "no tail discrimination\n";
        } else {
            out << "fit failed (" << g->failure << ")\n";
        }
    }
    out << "\n";
    std::snprintf(line, sizeof line, "ACD diff %s   CVaR diff %s   ECD %s   %s\n", fmt(r.acd_diff).c_str(),
                  fmt(r.cvar_diff).c_str(), r.ecd ? fmt(*r.ecd).c_str() : "n/a",
                  r.discriminates ? "DISCRIMINATES" : (r.ecd ? "no tail discrimination" : "audit incomplete"));
    out << line;

    out << "\nReturn levels\n";
    std::snprintf(line, sizeof line, "%-8s %14s %14s\n", "m", "unprivileged", "privileged");
    out << line;
    for (auto m : r.config.return_periods) {
        const auto cell = [m](const GroupTailReport& g) -> std::string {
            const auto it = g.return_levels.find(m);
            if (it != g.return_levels.end()) return fmt(it->second);
            return g.status == TailStatus::Degenerate ? "none" : "-";
        };
        std::snprintf(line, sizeof line, "%-8llu %14s %14s\n", static_cast<unsigned long long>(m),
                      cell(r.unprivileged).c_str(), cell(r.privileged).c_str());
        out << line;
    }
    return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorCode::Io, "cannot write " + tmp.string());
        f << contents;
        f.close();
        if (!f) fail(ErrorCode::Io, "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::Io, "cannot rename onto " + path.string());
    }
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot read " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::istreambuf_iterator<char> it(f), end; it != end; ++it) {
        h ^= static_cast<unsigned char>(*it);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string qq_csv(const QqDiagnostic& qq) {
    std::string out = "empirical,theoretical\n";
    char buf[80];
    for (const auto& [e, t] : qq.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", e, t);
        out += buf;
    }
    return out;
}

std::string density_csv(const EvtFit& fit, std::span<const double> exceedances, int points) {
    std::string out = "x,density\n";
    if (exceedances.empty() || points < 2) return out;
    const auto [lo, hi] = std::minmax_element(exceedances.begin(), exceedances.end());
    const double pad = 0.1 * (*hi - *lo);
    const double a = *lo - pad, b = *hi + pad;
    char buf[80];
    for (int i = 0; i < points; ++i) {
        const double x = a + (b - a) * i / (points - 1);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, gev_pdf(fit.gev, x));
        out += buf;
    }
    return out;
}

}  // namespace evtfair
