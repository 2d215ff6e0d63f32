#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "nf_cli";

int run(const std::string& args) {
    const std::string cmd = std::string(NORMALFIELD_CLI) + " " + args + " > " + (kWork / "out.txt").string() +
                            " 2> " + (kWork / "err.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

class Cli : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        ASSERT_EQ(run("scene generate --kind shiny_sphere --views 3 --test-views 2 --resolution 12 --out " +
                      (kWork / "data").string()),
                  0)
            << slurp(kWork / "err.txt");
        ASSERT_EQ(run("train --data " + (kWork / "data").string() + " --out " + (kWork / "run").string() +
                      " --iterations 3 --set rays_per_batch=32 --set samples_per_ray=16 --set grid_resolution=8"),
                  0)
            << slurp(kWork / "err.txt");
        fs::copy_file(kWork / "out.txt", kWork / "run" / "train.out");
    }
    static void TearDownTestSuite() { fs::remove_all(kWork); }
};

}  // namespace

TEST_F(Cli, TrainWritesRunArtifacts) {
    EXPECT_TRUE(fs::exists(kWork / "run" / "checkpoint.nfld"));
    EXPECT_EQ(first_line(kWork / "run" / "train_log.csv"), "iter,loss_c,loss_n,lambda_n,lr_grid,psnr_probe");
    const std::string cfg = slurp(kWork / "run" / "run.toml");
    EXPECT_NE(cfg.find("adam_beta1 = 0.9\n"), std::string::npos) << cfg;
    EXPECT_NE(cfg.find("adam_beta2 = 0.99\n"), std::string::npos);
    EXPECT_NE(slurp(kWork / "run" / "train.out").find("beta2=0.99"), std::string::npos);
    EXPECT_NE(cfg.find("adam_eps = 1e-15"), std::string::npos);
}

TEST_F(Cli, EvalOnCheckpointWritesCsv) {
    const fs::path csv = kWork / "metrics.csv";
    ASSERT_EQ(run("eval --checkpoint " + (kWork / "run" / "checkpoint.nfld").string() + " --data " +
                  (kWork / "data").string() + " --samples 16 --out " + csv.string()),
              0)
        << slurp(kWork / "err.txt");
    EXPECT_EQ(first_line(csv), "view,psnr,mae_deg,foreground_pixels,mae_density,mae_pred");
    EXPECT_NE(slurp(kWork / "out.txt").find("psnr"), std::string::npos);
}

TEST_F(Cli, RenderEmitsPfmAndPreview) {
    const std::string prefix = (kWork / "img" / "nt").string();
    ASSERT_EQ(run("render --checkpoint " + (kWork / "run" / "checkpoint.nfld").string() + " --data " +
                  (kWork / "data").string() + " --mode normal-trans --samples 16 --out " + prefix),
              0)
        << slurp(kWork / "err.txt");
    EXPECT_TRUE(fs::exists(prefix + ".pfm"));
    EXPECT_TRUE(fs::exists(prefix + ".png"));
    EXPECT_EQ(run("render --checkpoint " + (kWork / "run" / "checkpoint.nfld").string() + " --data " +
                  (kWork / "data").string() + " --mode sideways --out " + prefix),
              2);
}

TEST_F(Cli, ProbeAnalyticSlab) {
    const fs::path csv = kWork / "probe.csv";
    ASSERT_EQ(run("probe --analytic gaussian_slab --samples 256 --out " + csv.string()), 0);
    EXPECT_EQ(first_line(csv).substr(0, 6), "t,b,si");
    EXPECT_NE(slurp(kWork / "err.txt").find("density sign flips"), std::string::npos);
    EXPECT_EQ(run("probe --checkpoint " + (kWork / "run" / "checkpoint.nfld").string() + " --origin -2,0,0.1"), 0);
    EXPECT_EQ(run("probe"), 2);
}

TEST_F(Cli, EnvExport) {
    const fs::path pfm = kWork / "env.pfm";
    ASSERT_EQ(run("env export --ground-truth --width 32 --height 16 --out " + pfm.string()), 0);
    EXPECT_EQ(fs::file_size(pfm), std::string("PF\n32 16\n-1.0\n").size() + 32 * 16 * 12);
    EXPECT_EQ(run("env export --checkpoint " + (kWork / "run" / "checkpoint.nfld").string() + " --out " +
                  (kWork / "env2.pfm").string()),
              0);
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run("train --bogus"), 2);
    EXPECT_NE(slurp(kWork / "err.txt").find("Usage"), std::string::npos);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("eval --checkpoint /nonexistent.nfld --data " + (kWork / "data").string()), 3);
    EXPECT_EQ(run("train --data /nonexistent --out " + (kWork / "x").string()), 3);
    EXPECT_EQ(run("train --data " + (kWork / "data").string() + " --out " + (kWork / "x").string() +
                  " --set no_such_key=1"),
              2);
    EXPECT_EQ(run("scene generate --kind teapot --out " + (kWork / "t").string()), 2);
}

TEST_F(Cli, GradcheckPassesAndReportsCsv) {
    const fs::path csv = kWork / "gc.csv";
    ASSERT_EQ(run("gradcheck --out " + csv.string()), 0) << slurp(kWork / "err.txt");
    EXPECT_EQ(first_line(csv), "op,max_rel_err,checked,tolerance,pass");
    // An impossible tolerance turns into a numerical failure.
    EXPECT_EQ(run("gradcheck --tolerance 1e-300"), 4);
}
