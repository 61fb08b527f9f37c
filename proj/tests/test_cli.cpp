#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mbe/io.hpp"

namespace fs = std::filesystem;

#ifndef MBE_CLI_PATH
#error "MBE_CLI_PATH must name the CLI executable"
#endif

namespace {

struct CliRun {
    int code = -1;
    std::string output;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("mbe_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const std::string& name, const std::string& text) {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    CliRun run(const std::string& args) {
        const fs::path log = dir_ / "cli.log";
        const std::string cmd = std::string(MBE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        CliRun r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.output = slurp(log);
        return r;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    // Rows of a CSV, skipping the comment line and the header.
    static std::vector<std::vector<std::string>> rows(const fs::path& p) {
        std::istringstream in(slurp(p));
        std::vector<std::vector<std::string>> out;
        std::string line;
        bool header = false;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (!header) {
                header = true;
                continue;
            }
            std::vector<std::string> cells;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            out.push_back(cells);
        }
        return out;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, RejectsOrderedLevelsViolation) {
    const auto cfg = write_config("c.json", R"({"schema_version": 1, "model": {"omega1": 2, "omega2": 1}})");
    const CliRun r = run("--config " + cfg.string() + " --out " + dir_.string() + " simulate");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("omega2 > omega1"), std::string::npos) << r.output;
}

TEST_F(CliTest, RejectsUnknownKeys) {
    const auto cfg = write_config("c.json", R"({"schema_version": 1, "modle": {}})");
    const CliRun r = run("--config " + cfg.string() + " --out " + dir_.string() + " simulate");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("modle"), std::string::npos) << r.output;
}

TEST_F(CliTest, EmptySecondBranchIsDomainError) {
    // |Ae| = 5 exceeds c r for these couplings, so the second branch is empty.
    const auto cfg = write_config("c.json", R"({"schema_version": 1, "model": {"p": 0.001, "gamma": 0.0005},
        "pumping": {"Ae": 5}})");
    const CliRun r = run("--config " + cfg.string() + " --out " + dir_.string() + " equilibria");
    EXPECT_EQ(r.code, 4) << r.output;
    EXPECT_NE(r.output.find("c r > |Ae| violated"), std::string::npos) << r.output;
}

TEST_F(CliTest, UncoupledFieldTracesCircle) {
    const auto cfg = write_config("c.json", R"({"schema_version": 1, "model": {"p": 0, "gamma": 0},
        "pumping": {"Ae": 0}, "simulate": {"M": [0.7, 0], "S": [0.6, 0, 0.8], "t1": 50, "dt": 0.25}})");
    const CliRun r = run("--config " + cfg.string() + " --out " + dir_.string() + " simulate");
    ASSERT_EQ(r.code, 0) << r.output;
    const auto data = rows(dir_ / "trajectory.csv");
    ASSERT_EQ(data.size(), 201u);
    double worst = 0.0;
    for (const auto& row : data) {
        const double t = std::stod(row[0]);
        const double re = std::stod(row[3]), im = std::stod(row[4]);
        worst = std::max(worst, std::abs(re - 0.7 * std::cos(t)));
        worst = std::max(worst, std::abs(im + 0.7 * std::sin(t)));
        EXPECT_EQ(std::stod(row[9]), 0.0);
    }
    EXPECT_LT(worst, 1e-10);
}

TEST_F(CliTest, FullAndInteractionPicturesAgree) {
    const std::string body = R"("model": {"p": 0.01, "gamma": 0.005}, "pumping": {"Ae": [0.5, 0.2]}, "tol": 1e-10,
        "simulate": {"kind": "KIND", "M": [0.3, 0.1], "S": [0.2, 0.3, 0.5], "t1": 30, "dt": 0.5}})";
    auto cfg_for = [&](const std::string& kind) {
        std::string b = body;
        b.replace(b.find("KIND"), 4, kind);
        return write_config(kind + ".json", "{\"schema_version\": 1, " + b);
    };
    const fs::path full = dir_ / "full", inter = dir_ / "inter";
    fs::create_directories(full);
    fs::create_directories(inter);
    ASSERT_EQ(run("--config " + cfg_for("full").string() + " --out " + full.string() + " simulate").code, 0);
    ASSERT_EQ(run("--config " + cfg_for("interaction").string() + " --out " + inter.string() + " simulate").code, 0);
    const CliRun cmp = run("verify --compare " + (full / "trajectory.csv").string() + " " +
                        (inter / "trajectory.csv").string() + " --max-diff 1e-9");
    EXPECT_EQ(cmp.code, 0) << cmp.output;
    const CliRun strict = run("verify --compare " + (full / "trajectory.csv").string() + " " +
                           (inter / "trajectory.csv").string() + " --max-diff 0");
    EXPECT_EQ(strict.code, 1) << strict.output;
}

TEST_F(CliTest, EquilibriaTableProperties) {
    const auto cfg = write_config("c.json", R"({"schema_version": 1, "model": {"p": 0.004, "gamma": 0.002},
        "pumping": {"Ae": [0.6, 0.3]}})");
    const CliRun r = run("--config " + cfg.string() + " --out " + dir_.string() + " equilibria");
    ASSERT_EQ(r.code, 0) << r.output;
    const auto z2 = rows(dir_ / "equilibria_z2.csv");
    ASSERT_EQ(z2.size(), 65u);
    for (const auto& row : z2) {
        EXPECT_NEAR(std::stod(row[1]), -0.6, 1e-15);
        EXPECT_NEAR(std::stod(row[2]), -0.3, 1e-15);
        EXPECT_LT(std::stod(row[6]), 1e-12);
        const double s3 = std::stod(row[0]);
        EXPECT_EQ(std::stod(row[7]), s3 > 0.0 ? 1.0 : 0.0) << "s3 = " << s3;
        EXPECT_EQ(row[7], row[8]);
    }
    EXPECT_EQ(std::stod(z2[32][0]), 0.0);
    EXPECT_EQ(std::stod(z2[32][9]), 1.0);  // degenerate at the intersection
    const auto z1 = rows(dir_ / "equilibria_z1.csv");
    EXPECT_GT(z1.size(), 0u);
    for (const auto& row : z1) EXPECT_LT(std::stod(row[6]), 1e-12);
}

TEST_F(CliTest, ReportsAreByteIdenticalAcrossWorkersAndVerify) {
    const auto cfg = write_config("c.json", R"({"schema_version": 1, "seed": 7,
        "experiment": {"name": "stable", "r_values": [2], "p": 0.01, "samples": 3, "attraction_p": 0.01,
                       "time_samples": 200}})");
    const fs::path a = dir_ / "a", b = dir_ / "b";
    fs::create_directories(a);
    fs::create_directories(b);
    const CliRun ra = run("--config " + cfg.string() + " --out " + a.string() + " --workers 1 experiment");
    const CliRun rb = run("--config " + cfg.string() + " --out " + b.string() + " --workers 3 experiment");
    ASSERT_NE(ra.code, 2) << ra.output;
    ASSERT_EQ(ra.code, rb.code);
    for (const char* f : {"stable.json", "stable.csv", "stable_attraction.csv"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    const CliRun ok = run("--config " + cfg.string() + " --out " + a.string() + " verify");
    EXPECT_EQ(ok.code, 0) << ok.output;

    // Another seed changes the config hash.
    const CliRun wrong = run("--config " + cfg.string() + " --seed 8 --out " + a.string() + " verify");
    EXPECT_EQ(wrong.code, 1) << wrong.output;

    std::string csv = slurp(a / "stable.csv");
    csv.back() = csv.back() == '\n' ? ' ' : '\n';
    std::ofstream(a / "stable.csv", std::ios::binary) << csv;
    const CliRun bad = run("--out " + a.string() + " verify");
    EXPECT_EQ(bad.code, 1) << bad.output;
    EXPECT_NE(bad.output.find("FAIL stable.csv"), std::string::npos) << bad.output;
}

TEST_F(CliTest, KbmReportListsThreeRatios) {
    const auto cfg = write_config("c.json", R"({"schema_version": 1, "experiment": {"name": "kbm", "grid": 2}})");
    const CliRun r = run("--config " + cfg.string() + " --out " + dir_.string() + " experiment");
    ASSERT_EQ(r.code, 0) << r.output;
    const std::string doc = slurp(dir_ / "kbm.json");
    EXPECT_NE(doc.find("\"delta_over_p\""), std::string::npos);
    EXPECT_EQ(rows(dir_ / "kbm.csv").size(), 3u);
    EXPECT_NE(doc.find("\"content_hash\""), std::string::npos);
}

TEST_F(CliTest, MissingConfigFileIsConfigError) {
    const CliRun r = run("--config " + (dir_ / "absent.json").string() + " --out " + dir_.string() + " simulate");
    EXPECT_EQ(r.code, 2) << r.output;
}

TEST_F(CliTest, VerifySkipsForeignJsonInOutputDirectory) {
    const auto cfg = write_config("c.json", R"({"schema_version": 1, "simulate": {"t1": 2, "dt": 0.5}})");
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + dir_.string() + " simulate").code, 0);
    const CliRun r = run("--config " + cfg.string() + " --out " + dir_.string() + " verify");
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("SKIP c.json"), std::string::npos) << r.output;

    fs::remove(dir_ / "trajectory.json");
    EXPECT_EQ(run("--out " + dir_.string() + " verify").code, 1);
}
