#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmfilter/commands.hpp"
#include "cmfilter/config.hpp"
#include "cmfilter/errors.hpp"

using namespace cmf;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"([model]
kernel = random_walk
observation = linear_quadratic
N = 2
lower = 0
upper = 1
alpha = 2
beta = 0.5

[experiment]
T = 4
resolutions = 4, 8
n_traj = 3
A_ref = 64
n_pairs = 200
n_trials = 200
n_concentration = 500
)";

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("cmfilter_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) {
        fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "cmfilter");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return cli_main(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}  // namespace

TEST(Config, ParsesAndRoundTrips) {
    RunConfig c = parse_config(kMinimal);
    EXPECT_EQ(c.model.N, 2);
    EXPECT_EQ(c.model.M, 1);
    EXPECT_EQ(c.experiment.resolutions, (std::vector<int>{4, 8}));
    EXPECT_EQ(c.model.horizon, 4);
    std::string text = serialize_config(c);
    RunConfig back = parse_config(text);
    EXPECT_EQ(back, c);
    EXPECT_EQ(serialize_config(back), text);
}

TEST(Config, ShippedConfigsRoundTrip) {
    for (const char* name : {"demo_random_walk.ini", "demo_two_state.ini"}) {
        RunConfig c = load_config(std::string(CMF_CONFIG_DIR) + "/" + name);
        EXPECT_EQ(parse_config(serialize_config(c)), c) << name;
        EXPECT_NO_THROW(make_system(c));
    }
}

TEST(Config, UnknownKeyIsLineAnchored) {
    std::string text = std::string(kMinimal) + "bogus = 1\n";
    try {
        parse_config(text);
        FAIL();
    } catch (const ConfigError& e) {
        std::string w = e.what();
        EXPECT_NE(w.find("line 18"), std::string::npos) << w;
        EXPECT_NE(w.find("bogus"), std::string::npos) << w;
    }
}

TEST(Config, BadNumberIsLineAnchored) {
    std::string text = kMinimal;
    text.replace(text.find("beta = 0.5"), 10, "beta = 0.5x");
    try {
        parse_config(text);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 8"), std::string::npos) << e.what();
    }
}

TEST(Config, MissingRequiredFieldNamed) {
    std::string text = kMinimal;
    text.erase(text.find("N = 2\n"), 6);
    try {
        parse_config(text);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("model.N"), std::string::npos) << e.what();
    }
}

TEST(Config, RangesValidatedBeforeWork) {
    std::string text = kMinimal;
    text.replace(text.find("T = 4"), 5, "T = -1");
    EXPECT_THROW(parse_config(text), ConfigError);
    text = kMinimal;
    text.replace(text.find("upper = 1"), 9, "upper = 0, 1");
    EXPECT_THROW(parse_config(text), ConfigError);
}

TEST(Config, DeclaredConstantsOverrideAnalytic) {
    std::string text = std::string(kMinimal) + "[constants]\nK_mu = 0.25\n";
    RunConfig c = parse_config(text);
    EXPECT_EQ(resolved_constants(c).K_mu, 0.25);
    EXPECT_EQ(make_system(c).constants.K_mu, 0.25);
}

TEST_F(CliTest, SimulateSingleRowAndDeterministic) {
    std::string text = kMinimal;
    text.replace(text.find("T = 4"), 5, "T = 0");
    fs::path cfg = write("c.ini", text);
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (dir_ / "a").string()}), kExitOk) << err_.str();
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (dir_ / "b").string()}), kExitOk);
    std::string a = slurp(dir_ / "a" / "trajectory.csv");
    EXPECT_EQ(a, slurp(dir_ / "b" / "trajectory.csv"));
    std::istringstream in(a);
    int rows = 0;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (!header) {
            EXPECT_EQ(line, "t,x_0,y_0,y_1");
            header = true;
            continue;
        }
        ++rows;
    }
    EXPECT_EQ(rows, 1);
}

TEST_F(CliTest, MissingFieldExitsTwo) {
    std::string text = kMinimal;
    text.erase(text.find("kernel = random_walk\n"), 21);
    fs::path cfg = write("c.ini", text);
    EXPECT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir_.string()}), kExitUsage);
    EXPECT_NE(err_.str().find("model.kernel"), std::string::npos) << err_.str();
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run({}), kExitUsage);
    EXPECT_EQ(run({"simulate"}), kExitUsage);
    EXPECT_EQ(run({"frobnicate", "--config", "x"}), kExitUsage);
    EXPECT_EQ(run({"simulate", "--config", (dir_ / "nope.ini").string()}), kExitUsage);
    fs::path cfg = write("c.ini", kMinimal);
    EXPECT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir_.string(), "--measure", "q"}), kExitUsage);
}

TEST_F(CliTest, SimulateThenFilterRoundTrip) {
    fs::path cfg = write("c.ini", kMinimal);
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
    fs::path traj = dir_ / "trajectory.csv";
    std::string before = slurp(traj);
    ASSERT_EQ(run({"filter", "--config", cfg.string(), "--out", dir_.string(), "--trajectory", traj.string(),
                   "--resolution", "12"}),
              kExitOk)
        << err_.str();
    EXPECT_EQ(slurp(traj), before);
    std::string est = slurp(dir_ / "estimates.csv");
    EXPECT_NE(est.find("# A=12"), std::string::npos);
    EXPECT_NE(est.find("# chain_law=quantized_chain"), std::string::npos);
    EXPECT_NE(est.find("t,estimate_0,log_norm"), std::string::npos);
}

TEST_F(CliTest, FilterDimensionMismatchExitsTwo) {
    fs::path cfg = write("c.ini", kMinimal);
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
    std::string other = kMinimal;
    other.replace(other.find("N = 2"), 5, "N = 3");
    fs::path cfg3 = write("c3.ini", other);
    EXPECT_EQ(run({"filter", "--config", cfg3.string(), "--out", dir_.string(), "--trajectory",
                   (dir_ / "trajectory.csv").string()}),
              kExitUsage);
}

TEST_F(CliTest, CorruptRowReportsRowNumber) {
    fs::path cfg = write("c.ini", kMinimal);
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
    std::string traj = slurp(dir_ / "trajectory.csv");
    std::istringstream in(traj);
    std::string line, rebuilt;
    int n = 0, target = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.rfind("2,", 0) == 0) {
            line = "2,0.5,abc,1";
            target = n;
        }
        rebuilt += line + "\n";
    }
    ASSERT_GT(target, 0);
    fs::path bad = write("bad.csv", rebuilt);
    EXPECT_EQ(run({"filter", "--config", cfg.string(), "--out", dir_.string(), "--trajectory", bad.string()}),
              kExitUsage);
    EXPECT_NE(err_.str().find(std::to_string(target)), std::string::npos) << err_.str();
}

TEST_F(CliTest, OutputDirectoryPrecedence) {
    std::string text = std::string(kMinimal) + "[output]\ndir = " + (dir_ / "from_config").string() + "\n";
    fs::path cfg = write("c.ini", text);
    ::unsetenv("CMFILTER_OUT");
    ASSERT_EQ(run({"simulate", "--config", cfg.string()}), kExitOk);
    EXPECT_TRUE(fs::exists(dir_ / "from_config" / "trajectory.csv"));
    ::setenv("CMFILTER_OUT", (dir_ / "from_env").c_str(), 1);
    ASSERT_EQ(run({"simulate", "--config", cfg.string()}), kExitOk);
    EXPECT_TRUE(fs::exists(dir_ / "from_env" / "trajectory.csv"));
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (dir_ / "from_flag").string()}), kExitOk);
    EXPECT_TRUE(fs::exists(dir_ / "from_flag" / "trajectory.csv"));
    ::unsetenv("CMFILTER_OUT");
}

TEST_F(CliTest, VerifyPassesOnDemoModel) {
    fs::path cfg = write("c.ini", kMinimal);
    EXPECT_EQ(run({"verify", "--config", cfg.string(), "--out", dir_.string()}), kExitOk) << out_.str();
    EXPECT_TRUE(fs::exists(dir_ / "bounds.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "assumptions.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "concentration.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "chi2.csv"));
}

TEST_F(CliTest, ForcedKmuViolationExitsOne) {
    std::string text = std::string(kMinimal) + "[constants]\nK_mu = 0.5\n";
    fs::path cfg = write("c.ini", text);
    EXPECT_EQ(run({"verify-bounds", "--config", cfg.string(), "--out", dir_.string()}), kExitScientific);
    std::string a = slurp(dir_ / "assumptions.csv");
    EXPECT_NE(a.find("violated,K_mu"), std::string::npos) << a;
    EXPECT_TRUE(fs::exists(dir_ / "bounds.csv"));
}

TEST_F(CliTest, ConvergeIsByteIdentical) {
    fs::path cfg = write("c.ini", kMinimal);
    ASSERT_EQ(run({"converge", "--config", cfg.string(), "--out", (dir_ / "a").string()}), kExitOk) << out_.str();
    ASSERT_EQ(run({"converge", "--config", cfg.string(), "--out", (dir_ / "b").string()}),
              kExitOk);
    EXPECT_EQ(slurp(dir_ / "a" / "curve.csv"), slurp(dir_ / "b" / "curve.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "kg.csv"), slurp(dir_ / "b" / "kg.csv"));
}

TEST_F(CliTest, ConvergeTwoStateSaturates) {
    fs::path cfg(std::string(CMF_CONFIG_DIR) + "/demo_two_state.ini");
    ASSERT_EQ(run({"converge", "--config", cfg.string(), "--out", dir_.string()}), kExitOk) << err_.str();
    std::ifstream in(dir_ / "curve.csv");
    CsvTable t = read_csv(in);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][0], 2.0);
    EXPECT_LE(t.rows[0][2], 1e-10);
}
