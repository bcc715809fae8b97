#include "evtfair/cli.hpp"
#include "evtfair/report.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace evtfair;

namespace {

class Cli : public ::testing::Test {
protected:
    fixtures::TempDir dir;
    std::ostringstream out, err;

    void SetUp() override {
        const auto ds = fixtures::labelled_task(300, 1);
        std::ofstream d(dir / "data.csv");
        write_csv(d, ds);
        std::ofstream s(dir / "schema.json");
        s << ds.schema().to_json_text();
    }

    int run(std::vector<std::string> args) {
        out.str("");
        err.str("");
        return evtfair::run(args, out, err);
    }

    std::string p(const std::string& name) const { return (dir / name).string(); }

    static std::string slurp(const std::filesystem::path& path) {
        std::ifstream f(path, std::ios::binary);
        std::ostringstream s;
        s << f.rdbuf();
        return s.str();
    }

    std::vector<std::string> audit_args(const std::string& out_name) {
        return {"audit", "--data", p("data.csv"), "--schema", p("schema.json"), "--attr", "race", "--privileged",
                "White", "--unprivileged", "Black", "--model", "builtin:logreg", "--out", out_name, "--seed", "7",
                "--bootstrap", "50"};
    }
};

}  // namespace

TEST_F(Cli, UnknownSubcommandIsUsageError) {
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_NE(err.str().find("Usage"), std::string::npos);
    EXPECT_EQ(run({}), 2);
}

TEST_F(Cli, MissingRequiredOptionIsUsageError) { EXPECT_EQ(run({"rl"}), 2); }

TEST_F(Cli, ReturnLevelsFromFit) {
    write_file_atomic(dir / "f.json", R"({"u":0.12,"zeta_u":0.00194871,"k":50,"gpd":{"sigma_hat":0.03,"xi":-0.08},
        "gev":{"mu":0.15,"sigma":0.01,"xi":-0.1},"se":{},"tail_type":"TypeI","qq_class":"Linear","horizon":"1000"})");
    ASSERT_EQ(run({"rl", "--fit", p("f.json"), "--m", "500,1000,2000"}), 0) << err.str();
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "m,return_level");
    const double expected[] = {0.12, 0.14, 0.16};
    for (int i = 0; i < 3; ++i) {
        ASSERT_TRUE(std::getline(lines, line));
        const auto comma = line.find(',');
        EXPECT_NEAR(std::stod(line.substr(comma + 1)), expected[i], 0.01);
    }
}

TEST_F(Cli, DomainErrorIsOneLine) {
    write_file_atomic(dir / "bad.json", R"({"u":0.12})");
    EXPECT_EQ(run({"rl", "--fit", p("bad.json")}), 1);
    const auto e = err.str();
    EXPECT_EQ(e.rfind("error: InvalidSchema: ", 0), 0u) << e;
    EXPECT_EQ(std::count(e.begin(), e.end(), '\n'), 1);
}

TEST_F(Cli, AuditIsByteIdenticalAcrossRuns) {
    ASSERT_EQ(run(audit_args(p("r1.json"))), 0) << err.str();
    std::filesystem::create_directories(dir / "again");
    ASSERT_EQ(run(audit_args(p("again/r1.json"))), 0) << err.str();
    const auto a = slurp(dir / "r1.json");
    EXPECT_EQ(a, slurp(dir / "again/r1.json"));
    const auto j = Json::parse(a);
    EXPECT_EQ(j["metadata"]["model_id"], "builtin:logreg");
    EXPECT_EQ(j["metadata"]["tool_version"], "0.1.0");
    for (const auto& [key, file] : j["diagnostics"].items())
        EXPECT_TRUE(std::filesystem::exists(dir / file.get<std::string>())) << key;
    EXPECT_NE(out.str().find("Return levels"), std::string::npos);
}

TEST_F(Cli, AuditWithExternalModel) {
    const auto script = dir / "m.sh";
    {
        std::ofstream f(script);
        f << "#!/bin/sh\ntail -n +2 | awk -F, '{ if ($3 == \"White\") print 0.6; else print 0.4 }'\n";
    }
    std::filesystem::permissions(script, std::filesystem::perms::owner_all);
    auto args = audit_args(p("ext.json"));
    args[12] = "exec:" + script.string();
    ASSERT_EQ(run(args), 0) << err.str();
    const auto j = Json::parse(slurp(dir / "ext.json"));
    // A constant gap gives every unprivileged row the same CD, a tail too tied
    // to fit; only the ACD gap is checked.
    EXPECT_NEAR(j["acd_diff"].get<double>(), 0.4, 1e-12);
}

TEST_F(Cli, FitThenRl) {
    std::ofstream v(dir / "values.csv");
    v << "cd\n";
    for (double x : fixtures::exponential(2000, 10.0, 3)) v << x << "\n";
    v.close();
    ASSERT_EQ(run({"fit", "--values", p("values.csv"), "--out", p("fit.json"), "--bootstrap", "50"}), 0) << err.str();
    const auto fit = fit_from_json(Json::parse(slurp(dir / "fit.json")));
    EXPECT_EQ(fit.k, 50u);
    ASSERT_EQ(run({"rl", "--fit", p("fit.json"), "--m", "100", "--out", p("rl.csv")}), 0);
    EXPECT_EQ(slurp(dir / "rl.csv").rfind("m,return_level\n100,", 0), 0u);
}

TEST_F(Cli, GenAndGenEval) {
    ASSERT_EQ(run({"gen", "--data", p("data.csv"), "--schema", p("schema.json"), "--attr", "race", "--privileged",
                   "White", "--unprivileged", "Black", "--target", "Black", "--n", "200", "--seed", "3", "--out",
                   p("synth.csv")}),
              0)
        << err.str();
    const auto synth = load_csv(dir / "synth.csv", fixtures::task_schema());
    EXPECT_EQ(synth.size(), 200u);
    for (const auto& r : synth.rows()) EXPECT_EQ(std::get<std::string>(r[2]), "Black");

    ASSERT_EQ(run({"gen-eval", "--data", p("data.csv"), "--schema", p("schema.json"), "--synth", p("synth.csv"),
                   "--test", p("data.csv"), "--out", p("ge.json")}),
              0)
        << err.str();
    const auto j = Json::parse(slurp(dir / "ge.json"));
    for (const char* k : {"fid", "kl", "lgd", "f1_loss"}) EXPECT_TRUE(j[k].is_number()) << k;
}

TEST_F(Cli, Compare) {
    std::ofstream a(dir / "a.csv"), b(dir / "b.csv");
    a << "seed,ecd\n";
    b << "seed,ecd\n";
    for (int i = 0; i < 10; ++i) {
        a << i << "," << 0.3 + 0.01 * i << "\n";
        b << i << "," << 0.01 * i << "\n";
    }
    a.close();
    b.close();
    ASSERT_EQ(run({"compare", "--a", p("a.csv"), "--b", p("b.csv"), "--metric", "ecd", "--out", p("c.json")}), 0)
        << err.str();
    const auto j = Json::parse(slurp(dir / "c.json"));
    EXPECT_EQ(j["cliffs_delta"].get<double>(), 1.0);
    EXPECT_TRUE(j["significant"].get<bool>());
    EXPECT_EQ(run({"compare", "--a", p("a.csv"), "--b", p("b.csv"), "--metric", "nope", "--out", p("c.json")}), 1);
}

TEST_F(Cli, Mitigate) {
    ASSERT_EQ(run({"mitigate", "--data", p("data.csv"), "--schema", p("schema.json"), "--attr", "race",
                   "--privileged", "White", "--unprivileged", "Black", "--trials", "3", "--seed", "1", "--out",
                   p("mit.json")}),
              0)
        << err.str();
    const auto j = Json::parse(slurp(dir / "mit.json"));
    EXPECT_EQ(j["trials"].size(), 3u);
    EXPECT_TRUE(j["best_config"].is_object());
}

TEST_F(Cli, MissingDataFileIsDomainError) {
    auto args = audit_args(p("x.json"));
    args[2] = p("nope.csv");
    EXPECT_EQ(run(args), 1);
    EXPECT_EQ(err.str().rfind("error: Io: ", 0), 0u) << err.str();
}
