#include "rpl/cli/cli.hpp"
#include "rpl/datasets.hpp"
#include "rpl/network.hpp"
#include "rpl/serialize.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace rpl;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "rpl");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rpl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenerateWritesTwoFiles) {
  const auto r = run({"generate", "--manifold", "cinnamon-roll", "--n", "300", "--lift", "24", "--seed", "7",
                      "--out", at("data")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Matrix x = data::load_embeddings(at("data/cinnamon-roll.emb"));
  EXPECT_EQ(x.rows(), 300);
  EXPECT_EQ(x.cols(), 24);
  EXPECT_EQ(data::load_embeddings(at("data/cinnamon-roll.latent.emb")).rows(), 300);
}

TEST_F(CliTest, UnknownManifoldListsNames) {
  const auto r = run({"generate", "--manifold", "nosuch", "--out", at("d")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cinnamon-roll"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("twisted-surface"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingInputIsUsageError) {
  const auto r = run({"train", "--input", at("absent.emb"), "--out", at("run")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("absent.emb"), std::string::npos) << r.err;
}

TEST_F(CliTest, TrainEchoesConfigAndAuditPasses) {
  ASSERT_EQ(run({"generate", "--n", "200", "--seed", "3", "--out", at("data")}).code, 0);
  const auto t = run({"train", "--input", at("data/cinnamon-roll.emb"), "--out", at("run"), "--epochs", "5",
                      "--phi", "cosine", "--mask", "topk", "--top-k", "4096", "--seed", "3"});
  ASSERT_EQ(t.code, 0) << t.err;
  const io::Json report = io::read_json(at("run/train_report.json"));
  EXPECT_EQ(report["run_config"]["relationship"]["phi"], "cosine");
  EXPECT_EQ(report["run_config"]["loss"]["masking"], "topk");
  EXPECT_EQ(report["run_config"]["loss"]["top_k"], 4096);
  EXPECT_EQ(report["master_seed"], 3);
  EXPECT_EQ(report["train"]["epoch_loss"].size(), 5u);
  EXPECT_TRUE(fs::exists(at("run/checkpoint.rplm")));

  const auto a = run({"audit", "--original", at("data/cinnamon-roll.emb"), "--projected", at("run/projected.emb"),
                      "--report", at("audit.json"), "--m", "500", "--delta", "0.05"});
  EXPECT_EQ(a.code, 0) << a.err;
  const io::Json audit = io::read_json(at("audit.json"));
  EXPECT_EQ(audit["audit"]["serfling"]["m"], 500);
  EXPECT_EQ(audit["audit"]["serfling"]["delta"], 0.05);
}

TEST_F(CliTest, AuditIdentityAndShapeMismatch) {
  ASSERT_EQ(run({"generate", "--n", "100", "--out", at("a")}).code, 0);
  ASSERT_EQ(run({"generate", "--n", "120", "--out", at("b")}).code, 0);
  const auto ok = run({"audit", "--original", at("a/cinnamon-roll.emb"), "--projected", at("a/cinnamon-roll.emb"),
                       "--report", at("self.json")});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(io::read_json(at("self.json"))["audit"]["epsilon"], 0.0);
  const auto bad = run({"audit", "--original", at("a/cinnamon-roll.emb"), "--projected",
                        at("b/cinnamon-roll.emb"), "--report", at("x.json")});
  EXPECT_EQ(bad.code, 2);
}

TEST_F(CliTest, EvaluateSelfRetrievalAndKList) {
  ASSERT_EQ(run({"generate", "--manifold", "paired-views", "--n", "60", "--out", at("p")}).code, 0);
  const auto r = run({"evaluate", "--a", at("p/paired-views.a.emb"), "--b", at("p/paired-views.a.emb"), "--report",
                      at("eval.json"), "--k-list", "1,5,10,100"});
  ASSERT_EQ(r.code, 0) << r.err;
  const io::Json j = io::read_json(at("eval.json"));
  ASSERT_EQ(j["retrieval"].size(), 2u);
  for (const auto& d : j["retrieval"]) {
    EXPECT_EQ(d["recall_at"]["1"], 1.0);
    EXPECT_EQ(d["recall_at"]["100"], 1.0);
    EXPECT_EQ(d["mrr_at_10"], 1.0);
    EXPECT_EQ(d["median_rank"], 1.0);
  }
  EXPECT_EQ(j["run_config"]["k_list"], io::Json({1, 5, 10, 100}));
  data::save_embeddings(at("short.emb"), Matrix::Ones(5, 64));
  EXPECT_EQ(run({"evaluate", "--a", at("p/paired-views.a.emb"), "--b", at("short.emb"), "--report", at("e.json")}).code,
            2);
}

TEST_F(CliTest, ProjectIdentityCheckpoint) {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6.5;
  data::save_embeddings(at("x.emb"), x);
  data::save_embeddings(at("lat.emb"), Matrix(Vector::LinSpaced(3, 0.0, 1.0)));
  nn::save_checkpoint(at("id.rplm"), nn::identity_params(2));
  const auto r = run({"project", "--checkpoint", at("id.rplm"), "--input", at("x.emb"), "--latent", at("lat.emb"),
                      "--output", at("plot.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(at("plot.csv")), "y0,y1,latent\n1,2,0\n3,4,0.5\n5,6.5,1\n");
  nn::save_checkpoint(at("id3.rplm"), nn::identity_params(3));
  EXPECT_EQ(run({"project", "--checkpoint", at("id3.rplm"), "--input", at("x.emb"), "--output", at("p.csv")}).code, 2);
}

TEST_F(CliTest, ConfigFileSuppliesAbsentFlags) {
  {
    std::ofstream cfg(at("run.toml"));
    cfg << "[generate]\nmanifold = \"twisted-surface\"\nn = 50\nseed = 9\n";
  }
  const auto r = run({"--config", at("run.toml"), "generate", "--n", "40", "--out", at("d")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data::load_embeddings(at("d/twisted-surface.emb")).rows(), 40);
  const io::Json j = io::read_json(at("d/twisted-surface.json"));
  EXPECT_EQ(j["master_seed"], 9);
}

TEST_F(CliTest, RbfWithoutGammaIsUsageError) {
  ASSERT_EQ(run({"generate", "--n", "50", "--out", at("d")}).code, 0);
  EXPECT_EQ(run({"train", "--input", at("d/cinnamon-roll.emb"), "--out", at("r"), "--phi", "rbf"}).code, 2);
}
