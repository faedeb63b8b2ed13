#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("gpssm_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    RunResult run(const std::string& args) const {
        const fs::path out = dir_ / "stdout.txt";
        const fs::path err = dir_ / "stderr.txt";
        const std::string cmd = std::string(GPSSM_CLI_PATH) + " " + args + " > " + out.string() +
                                " 2> " + err.string();
        const int status = std::system(cmd.c_str());
        RunResult result;
        result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        result.out = slurp(out);
        result.err = slurp(err);
        return result;
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    std::string train_cubic(const std::string& model_name) const {
        const auto data = path("cubic.csv");
        EXPECT_EQ(run("generate cubic --output " + data.string()).exit_code, 0);
        const auto model = path(model_name);
        EXPECT_EQ(run("train " + data.string() + " --output " + model.string()).exit_code, 0);
        return model.string();
    }

    fs::path dir_;
};

int count_lines(const std::string& text) {
    int lines = 0;
    for (const char c : text)
        if (c == '\n') ++lines;
    return lines;
}

TEST_F(CliTest, GenerateCubicDefaults) {
    const auto out = path("cubic.csv");
    const auto result = run("generate cubic --output " + out.string());
    ASSERT_EQ(result.exit_code, 0) << result.err;
    const std::string csv = slurp(out);
    EXPECT_EQ(count_lines(csv), 21);  // header + 20 rows
    EXPECT_EQ(csv.substr(0, 8), "x_1,y_1\n");
    EXPECT_NE(result.out.find("count=20"), std::string::npos);
}

TEST_F(CliTest, GenerateVanderpolDefaults) {
    const auto out = path("vdp.csv");
    const auto result = run("generate vanderpol --output " + out.string());
    ASSERT_EQ(result.exit_code, 0) << result.err;
    const std::string csv = slurp(out);
    EXPECT_EQ(count_lines(csv), 442);
    EXPECT_EQ(csv.substr(0, 16), "x_1,x_2,y_1,y_2\n");
}

TEST_F(CliTest, GenerateIsByteIdenticalUnderFixedSeed) {
    const auto a = path("a.csv"), b = path("b.csv");
    ASSERT_EQ(run("generate cubic --seed 99 --output " + a.string()).exit_code, 0);
    ASSERT_EQ(run("generate cubic --seed 99 --output " + b.string()).exit_code, 0);
    EXPECT_EQ(slurp(a), slurp(b));
    const auto c = path("c.csv");
    ASSERT_EQ(run("generate cubic --seed 100 --output " + c.string()).exit_code, 0);
    EXPECT_NE(slurp(a), slurp(c));
}

TEST_F(CliTest, GenerateUnknownDatasetIsUsageError) {
    EXPECT_EQ(run("generate pendulum --output " + path("x.csv").string()).exit_code, 2);
}

TEST_F(CliTest, TrainProducesModelInTheReportedBand) {
    const auto model_path = train_cubic("model.json");
    const auto j = nlohmann::json::parse(slurp(model_path));
    EXPECT_EQ(j.at("schema"), "gpssm-model");
    const double sigma_f = j.at("kernels").at(0).at("sigma_f").get<double>();
    const double l = j.at("kernels").at(0).at("length_scale").get<double>();
    EXPECT_GE(sigma_f, 2.0);
    EXPECT_LE(sigma_f, 9.0);
    EXPECT_GE(l, 1.5);
    EXPECT_LE(l, 8.0);
    EXPECT_TRUE(j.contains("log_marginal_likelihood"));
}

TEST_F(CliTest, RetrainingIsByteIdentical) {
    const auto data = path("cubic.csv");
    ASSERT_EQ(run("generate cubic --output " + data.string()).exit_code, 0);
    const auto m1 = path("m1.json"), m2 = path("m2.json");
    ASSERT_EQ(run("train " + data.string() + " --output " + m1.string()).exit_code, 0);
    ASSERT_EQ(run("train " + data.string() + " --output " + m2.string()).exit_code, 0);
    EXPECT_EQ(slurp(m1), slurp(m2));
}

TEST_F(CliTest, TrainOnEmptyCsvIsUsageError) {
    const auto data = path("empty.csv");
    std::ofstream(data).close();
    const auto result = run("train " + data.string() + " --output " + path("m.json").string());
    EXPECT_EQ(result.exit_code, 2);
}

TEST_F(CliTest, EquilibriumBenchmarkSettings) {
    const auto model = train_cubic("model.json");
    const auto eq = path("eq.csv"), summary = path("eq.json");
    const auto result = run("equilibrium " + model + " --interval -12:8 --q 150 --output " +
                            eq.string() + " --summary " + summary.string());
    ASSERT_EQ(result.exit_code, 0) << result.err;
    const auto j = nlohmann::json::parse(slurp(summary));
    EXPECT_LE(j.at("residual").get<double>(), 1e-4);
    EXPECT_LE(j.at("singular_value_min").get<double>(),
              1e-6 * j.at("singular_value_max").get<double>());
    EXPECT_NEAR(j.at("mass").get<double>(), 1.0, 1e-8);
    EXPECT_EQ(count_lines(slurp(eq)), 152);

    // rerun: byte-identical outputs
    const auto eq2 = path("eq2.csv");
    ASSERT_EQ(run("equilibrium " + model + " --interval -12:8 --q 150 --output " + eq2.string() +
                  " --summary " + path("eq2.json").string())
                  .exit_code,
              0);
    EXPECT_EQ(slurp(eq), slurp(eq2));
}

TEST_F(CliTest, EquilibriumNoSolutionExitsWithDistinctCode) {
    const auto model = train_cubic("model.json");
    const auto result = run("equilibrium " + model + " --interval -0.5:0.5 --q 4 --output " +
                            path("eq.csv").string());
    EXPECT_EQ(result.exit_code, 3);
    EXPECT_NE(result.err.find("No solution"), std::string::npos);
}

TEST_F(CliTest, StabilityReportWithEmpiricalBlock) {
    const auto model = train_cubic("model.json");
    const auto report = path("report.json");
    const auto result = run("stability " + model + " --empirical --steps 200 --rollouts 16 "
                            "--output " + report.string());
    ASSERT_EQ(result.exit_code, 0) << result.err;
    const auto j = nlohmann::json::parse(slurp(report));
    EXPECT_GT(j.at("bound").get<double>(), 0.0);
    EXPECT_EQ(j.at("recurrent_radius_sq"), j.at("bound"));
    ASSERT_TRUE(j.contains("empirical"));
    EXPECT_EQ(j.at("empirical").at("rollouts").get<int>(), 16);
    EXPECT_TRUE(j.at("empirical").at("within_bound").get<bool>());
}

TEST_F(CliTest, ValidatePipelineFailsToRejectStationarity) {
    const auto model = train_cubic("model.json");
    const auto eq = path("eq.csv");
    ASSERT_EQ(run("equilibrium " + model + " --output " + eq.string() + " --summary " +
                  path("s.json").string())
                  .exit_code,
              0);
    const auto result = run("validate " + model + " " + eq.string() + " --count 30000 --output " +
                            path("ks.json").string());
    ASSERT_EQ(result.exit_code, 0) << result.err;
    const auto j = nlohmann::json::parse(slurp(path("ks.json")));
    EXPECT_FALSE(j.at("reject").get<bool>());
    EXPECT_EQ(j.at("count").get<int>(), 30000);
}

TEST_F(CliTest, SimulateWritesEnsembleCsv) {
    const auto model = train_cubic("model.json");
    const auto out = path("ensemble.csv");
    const auto result =
        run("simulate " + model + " --x0 0.5 --steps 20 --rollouts 32 --dt 1 --output " +
            out.string());
    ASSERT_EQ(result.exit_code, 0) << result.err;
    const std::string csv = slurp(out);
    EXPECT_EQ(count_lines(csv), 22);  // header + 21 states
    EXPECT_EQ(csv.substr(0, 25), "step,time,mean_1,std_1\n0,");
}

TEST_F(CliTest, PredictEmitsMoments) {
    const auto model = train_cubic("model.json");
    const auto result = run("predict " + model + " --at 0.0");
    ASSERT_EQ(result.exit_code, 0) << result.err;
    const auto j = nlohmann::json::parse(result.out);
    EXPECT_EQ(j.at("mean").size(), 1u);
    EXPECT_GE(j.at("variance").at(0).get<double>(), 0.0);
}

TEST_F(CliTest, MissingSubcommandIsUsageError) {
    EXPECT_EQ(run("").exit_code, 2);
}

}  // namespace
