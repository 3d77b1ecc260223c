#include <sss/report.hpp>
#include <sss/synthbench.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string output;
};

Outcome run(const std::string& args) {
    const std::string cmd = std::string(SSS_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        return {-1, {}};
    }
    std::string out;
    char buf[4096];
    while (const auto n = fread(buf, 1, sizeof buf, pipe)) {
        out.append(buf, n);
    }
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
    return sss::detail::read_file(p.string());
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("sss_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
                std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    // Six columns generated from a small chain-and-collider structure.
    fs::path write_dataset() {
        sss::Rng rng(21);
        const auto truth = sss::Dag::from_arcs(6, {{0, 1}, {1, 2}, {3, 2}, {2, 4}, {5, 4}});
        const auto gt = sss::make_ground_truth(truth, {"a", "b", "c", "d", "e", "f"}, {}, rng);
        const auto data = sss::generate_data(gt, 150, rng);
        std::ofstream out(dir_ / "data.csv");
        out << "a,b,c,d,e,f\n";
        for (Eigen::Index r = 0; r < data.rows(); ++r) {
            for (int c = 0; c < 6; ++c) {
                out << (c ? "," : "") << fmt::format("{}", data.values()(r, c));
            }
            out << "\n";
        }
        return dir_ / "data.csv";
    }

    fs::path dir_;
};

const std::string kQuick = " --subsets 4 --generations 3 --population 16 ";

} // namespace

TEST_F(CliTest, SearchWritesAllOutputs) {
    const auto data = write_dataset();
    const auto r = run("search --data " + data.string() + kQuick + "--seed 5 --out " + (dir_ / "o").string());
    ASSERT_EQ(r.code, 0) << r.output;
    for (const char* f : {"edge_stability.csv", "path_stability.csv", "bic_curve.csv", "model.dot", "summary.json"}) {
        EXPECT_TRUE(fs::exists(dir_ / "o" / f)) << f;
    }
    const auto summary = nlohmann::json::parse(slurp(dir_ / "o" / "summary.json"));
    EXPECT_EQ(summary["thresholds"]["pi_sel"], 0.6);
    EXPECT_EQ(summary["seed"], 5);
    EXPECT_EQ(summary["parameters"]["subsets"], 4);
    EXPECT_EQ(summary["rows"], 150);
    EXPECT_NE(r.output.find("pi_bic"), std::string::npos);
    const auto edges = slurp(dir_ / "o" / "edge_stability.csv");
    EXPECT_EQ(edges.substr(0, edges.find('\n')), "complexity,var_a,var_b,probability,n_models");
    // 16 levels times 15 pairs plus the header.
    EXPECT_EQ(std::count(edges.begin(), edges.end(), '\n'), 16 * 15 + 1);
}

TEST_F(CliTest, UnknownConstraintNameExitsTwo) {
    const auto data = write_dataset();
    std::ofstream(dir_ / "c.txt") << "a -/-> b\n# comment\nqqq -/-> c\n";
    const auto r = run("search --data " + data.string() + " --constraints " + (dir_ / "c.txt").string() + kQuick +
                       "--seed 1 --out " + (dir_ / "o").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("line 3"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("qqq"), std::string::npos);
}

TEST_F(CliTest, BadInputsExitTwo) {
    const auto data = write_dataset();
    EXPECT_EQ(run("search --data " + (dir_ / "missing.csv").string()).code, 2);
    EXPECT_EQ(run("search --data " + data.string() + " --pi-sel 1.0 --out " + dir_.string()).code, 2);
    EXPECT_EQ(run("search --data " + data.string() + " --mutation-rate 2 --out " + dir_.string()).code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    std::ofstream(dir_ / "bad.csv") << "a,b\n1,2\n3,oops\n";
    const auto r = run("search --data " + (dir_ / "bad.csv").string() + " --out " + dir_.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("line 3"), std::string::npos);
}

TEST_F(CliTest, SameSeedSameBytes) {
    const auto data = write_dataset();
    const std::string base = "search --data " + data.string() + kQuick + "--seed 77 --out ";
    ASSERT_EQ(run(base + (dir_ / "x").string()).code, 0);
    ASSERT_EQ(run(base + (dir_ / "y").string() + " --workers 3").code, 0);
    for (const char* f : {"edge_stability.csv", "path_stability.csv", "bic_curve.csv", "model.dot", "summary.json"}) {
        EXPECT_EQ(slurp(dir_ / "x" / f), slurp(dir_ / "y" / f)) << f;
    }
}

TEST_F(CliTest, BenchmarkSingleRep) {
    const auto r = run("benchmark --truth " + std::string(SSS_DATA_DIR) + "/chain3.json --reps 1 --samples 300" +
                       kQuick + "--seed 2 --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const auto report = nlohmann::json::parse(slurp(dir_ / "benchmark_report.json"));
    EXPECT_TRUE(report["averaging"].contains("auc_edge"));
    // A chain has no compelled paths, so the path rate is undefined.
    EXPECT_TRUE(report["averaging"]["auc_path"].is_null());
    ASSERT_EQ(report["individual"].size(), 1u);
    EXPECT_TRUE(report["individual"][0].contains("auc_edge"));
    EXPECT_TRUE(fs::exists(dir_ / "roc_edge.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "roc_path.csv"));
}

TEST_F(CliTest, BenchmarkListsEveryRep) {
    std::ofstream(dir_ / "t.json") << R"({"names":["A","B","C"],"arcs":[["A","C"],["B","C"]]})";
    const auto r = run("benchmark --truth " + (dir_ / "t.json").string() + " --reps 10 --samples 120" + kQuick +
                       "--seed 3 --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const auto report = nlohmann::json::parse(slurp(dir_ / "benchmark_report.json"));
    EXPECT_EQ(report["individual"].size(), 10u);
    for (int k = 0; k < 10; ++k) {
        EXPECT_NE(r.output.find(fmt::format("{:<12}{:>6}", "individual", k)), std::string::npos);
    }
}

TEST_F(CliTest, MalformedTruthExitsTwo) {
    std::ofstream(dir_ / "t.json") << R"({"names":["A","B"], "arcs": [["A",)";
    EXPECT_EQ(run("benchmark --truth " + (dir_ / "t.json").string() + " --out " + dir_.string()).code, 2);
}

TEST_F(CliTest, ConvertToCpdag) {
    std::ofstream(dir_ / "g.txt") << "A -> C\nB -> C\nC -> D\n";
    const auto r = run("convert --input " + (dir_ / "g.txt").string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("\"A\" -> \"C\";"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("\"C\" -> \"D\";"), std::string::npos);

    std::ofstream(dir_ / "chain.txt") << "A -> B\n";
    std::ofstream(dir_ / "c.txt") << "A -/-> B\n";
    EXPECT_EQ(run("convert --input " + (dir_ / "chain.txt").string() + " --constraints " + (dir_ / "c.txt").string())
                  .code,
              2);
    const auto out = dir_ / "cp.dot";
    ASSERT_EQ(run("convert --input " + (dir_ / "chain.txt").string() + " --out " + out.string()).code, 0);
    EXPECT_NE(slurp(out).find("[dir=none]"), std::string::npos);
}
