#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "ramvs_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    const Result r = run("synth --out " + (root_ / "scene").string() + " --height 64 --width 80 --focal 80");
    ASSERT_EQ(r.status, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static Result run(const std::string& args, const std::string& env = "") {
    const fs::path err = root_ / "stderr.txt";
    const std::string cmd = env + " " + RAMVS_CLI + " " + args + " 2>" + err.string();
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    std::array<char, 4096> buf;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  }

  static std::string scene() { return (root_ / "scene").string(); }

  static std::map<std::string, std::string> dry_run(const std::string& extra) {
    const Result r = run("depth --scene x --out y --dry-run " + extra);
    EXPECT_EQ(r.status, 0) << r.err;
    std::map<std::string, std::string> kv;
    std::istringstream in(r.out);
    for (std::string line; std::getline(in, line);) {
      const auto eq = line.find('=');
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
  }

  static inline fs::path root_;
};

}  // namespace

TEST_F(CliTest, SynthLayout) {
  EXPECT_TRUE(fs::exists(root_ / "scene" / "pair.txt"));
  EXPECT_TRUE(fs::exists(root_ / "scene" / "images" / "00000004.png"));
  EXPECT_TRUE(fs::exists(root_ / "scene" / "cams" / "00000004_cam.txt"));
  EXPECT_TRUE(fs::exists(root_ / "scene" / "depths" / "00000000.pfm"));
  EXPECT_EQ(slurp(root_ / "scene" / "gt.ply").substr(0, 36), "ply\nformat binary_little_endian 1.0\n");
}

TEST_F(CliTest, DepthAgainstGroundTruthCloud) {
  const std::string out = (root_ / "gt_run").string();
  ASSERT_EQ(run("depth --scene " + scene() + " --out " + out).status, 0);
  ASSERT_EQ(run("fuse --scene " + scene() + " --depths " + out + " --out " + out + "/cloud.ply").status, 0);
  const Result e = run("eval --recon " + out + "/cloud.ply --gt " + scene() + "/gt.ply --tau 2.5");
  ASSERT_EQ(e.status, 0) << e.err;
  const auto pos = e.out.find("overall=");
  ASSERT_NE(pos, std::string::npos);
  const double overall = std::stod(e.out.substr(pos + 8));
  EXPECT_GT(overall, 0.0);
  EXPECT_LT(overall, 25.0);
}

TEST_F(CliTest, ThetaSweep) {
  const std::string out = (root_ / "sweep").string();
  const Result r = run("depth --scene " + scene() + " --out " + out + " --views 0 --theta-sweep");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, slurp(fs::path(out) / "theta_sweep.txt"));
  std::istringstream in(r.out);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header.substr(0, 5), "theta");
  std::vector<double> thetas;
  while (std::getline(in, line)) thetas.push_back(std::stod(line));
  EXPECT_EQ(thetas, (std::vector<double>{0.1, 0.2, 0.5, 1.0}));
  EXPECT_FALSE(fs::exists(fs::path(out) / "depths"));
}

TEST_F(CliTest, DepthFuseEvalChain) {
  const std::string out = (root_ / "run").string();
  ASSERT_EQ(run("depth --scene " + scene() + " --out " + out).status, 0);
  ASSERT_EQ(run("fuse --scene " + scene() + " --depths " + out + " --out " + out + "/cloud.ply").status, 0);
  ASSERT_EQ(run("fuse --scene " + scene() + " --depths " + out + " --out " + out + "/cloud_bin.ply --binary").status, 0);
  const Result e = run("eval --recon " + out + "/cloud.ply --gt " + out + "/cloud_bin.ply --tau 2.5");
  ASSERT_EQ(e.status, 0) << e.err;
  EXPECT_NE(e.out.find("accuracy=0\n"), std::string::npos) << e.out;
  EXPECT_NE(e.out.find("f_score=100\n"), std::string::npos);
  EXPECT_NE(e.out.find("max_dist=50\n"), std::string::npos);
}

TEST_F(CliTest, ThetaOneEqualsNoFusion) {
  const std::string a = (root_ / "theta1").string(), b = (root_ / "nofusion").string();
  ASSERT_EQ(run("depth --scene " + scene() + " --out " + a + " --views 0,2 --theta 1.0").status, 0);
  ASSERT_EQ(run("depth --scene " + scene() + " --out " + b + " --views 0,2 --no-fusion").status, 0);
  for (const char* f : {"depths/00000000.pfm", "depths/00000002.pfm", "confidence/00000002.pfm"}) {
    EXPECT_EQ(slurp(fs::path(a) / f), slurp(fs::path(b) / f)) << f;
  }
}

TEST_F(CliTest, DeterministicAcrossRunsAndThreads) {
  const std::string a = (root_ / "det_a").string(), b = (root_ / "det_b").string();
  ASSERT_EQ(run("depth --scene " + scene() + " --out " + a + " --views 1,3,4").status, 0);
  ASSERT_EQ(run("depth --scene " + scene() + " --out " + b + " --views 1,3,4", "RAMVS_THREADS=3").status, 0);
  for (const char* f : {"depths/00000001.pfm", "depths/00000003.pfm", "confidence/00000004.pfm"}) {
    EXPECT_EQ(slurp(fs::path(a) / f), slurp(fs::path(b) / f)) << f;
  }
  ASSERT_EQ(run("sdf-gt --scene " + scene() + " --out " + a + "/sdf --views 0").status, 0);
  ASSERT_EQ(run("sdf-gt --scene " + scene() + " --out " + b + "/sdf --views 0").status, 0);
  EXPECT_EQ(slurp(fs::path(a) / "sdf/00000000.vol"), slurp(fs::path(b) / "sdf/00000000.vol"));
}

TEST_F(CliTest, MeshAndBoundCheck) {
  const std::string out = (root_ / "mesh.ply").string();
  const Result m = run("mesh --scene " + scene() + " --out " + out + " --view 0");
  ASSERT_EQ(m.status, 0) << m.err;
  EXPECT_NE(slurp(out).find("property list uchar int vertex_indices"), std::string::npos);
  const Result skinny = run("bound-check --mode skinny");
  ASSERT_EQ(skinny.status, 0);
  EXPECT_NE(skinny.out.find("query  c"), std::string::npos) << skinny.out;
  EXPECT_NE(skinny.out.find(" no "), std::string::npos);
  const Result rnd = run("bound-check --mode random --count 2000 --seed 3");
  ASSERT_EQ(rnd.status, 0);
  EXPECT_NE(rnd.out.find("all      2000"), std::string::npos) << rnd.out;
  const Result dm = run("bound-check --mode depth --scene " + scene() + " --stride 4");
  ASSERT_EQ(dm.status, 0) << dm.err;
}

TEST_F(CliTest, ErrorsAndExitCodes) {
  Result r = run("depth --scene " + scene() + " --bogus-flag");
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(r.err.rfind("error: usage: ", 0), 0u) << r.err;
  r = run("depth --scene " + (root_ / "nope").string() + " --out " + (root_ / "x").string());
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error: io: ", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  r = run("eval --recon " + (root_ / "none.ply").string() + " --gt " + (root_ / "none.ply").string());
  EXPECT_EQ(r.status, 1);
  r = run("depth --scene x --out y --dry-run --n-views 4 --patch-k 4");
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error: domain: ", 0), 0u) << r.err;
}

TEST_F(CliTest, ConfigPrecedence) {
  const auto defaults = dry_run("");
  EXPECT_EQ(defaults.at("theta"), "0.10000000000000001");
  EXPECT_EQ(defaults.at("hypotheses"), "64,32,8");
  EXPECT_EQ(defaults.at("n-views"), "5");
  const fs::path cfg = root_ / "c.cfg";
  std::ofstream(cfg) << "theta=0.3\nn-views=3\npatch-k=7\nhypotheses=48,24,8\nweights=uniform\nno-fusion=true\n";
  const auto from_file = dry_run("--config " + cfg.string());
  EXPECT_EQ(from_file.at("theta"), "0.29999999999999999");
  EXPECT_EQ(from_file.at("n-views"), "3");
  EXPECT_EQ(from_file.at("patch-k"), "7");
  EXPECT_EQ(from_file.at("hypotheses"), "48,24,8");
  EXPECT_EQ(from_file.at("weights"), "uniform");
  EXPECT_EQ(from_file.at("fusion"), "false");
  const auto flags = dry_run("--config " + cfg.string() + " --theta 0.5 --n-views 4 --hypotheses 32,16,8");
  EXPECT_EQ(flags.at("theta"), "0.5");
  EXPECT_EQ(flags.at("n-views"), "4");
  EXPECT_EQ(flags.at("hypotheses"), "32,16,8");
  EXPECT_EQ(flags.at("patch-k"), "7");
  std::ofstream(cfg) << "unknown-key=1\n";
  EXPECT_EQ(run("depth --scene x --out y --dry-run --config " + cfg.string()).status, 2);
}
