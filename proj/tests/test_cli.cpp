#include <gtest/gtest.h>

#include <json.hpp>

#include "test_support.hpp"

using namespace synshadow;
using namespace synshadow::testing;
namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  TempDir root{"cli"};
  TempDir scratch{"cli_scratch"};

  void SetUp() override { write_demo_inputs(root.path()); }

  CommandResult cli(const std::string& args) {
    return run_command(shell_quote(SYNSHADOW_CLI) + " " + args, scratch.path());
  }
  std::string p(const std::string& rel) { return shell_quote((root / rel).string()); }

  csv::Table table(const fs::path& file) {
    std::ifstream in(file);
    return csv::read_table(in);
  }
  std::size_t png_count(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".png";
    return n;
  }
  std::string synth(const std::string& out, const std::string& extra = "") {
    return "synthesize --backgrounds " + p("backgrounds") + " --mattes " + p("mattes") + " --out " + p(out) + " " +
           extra;
  }
};

TEST_F(CliTest, HelpAndUnknownSubcommand) {
  EXPECT_EQ(cli("--help").exit_code, 0);
  EXPECT_NE(cli("frobnicate").exit_code, 0);
  EXPECT_EQ(cli("").exit_code, 1);
}

TEST_F(CliTest, RenderMattesCountsAndManifest) {
  const auto r = cli("render-mattes --config " + p("small.ini") + " --meshes " + p("meshes") + " --out " + p("r1") +
                     " --count 4 --seed 3");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(png_count(root / "r1"), 4u);
  const csv::Table t = table(root / "r1" / "scenes.csv");
  EXPECT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.header, scene_manifest_header());
  const MatteMap m = load_matte(root / "r1" / "000000.png");
  EXPECT_EQ(m.height(), 48u);

  const auto again = cli("render-mattes --config " + p("small.ini") + " --meshes " + p("meshes") + " --out " +
                         p("r2") + " --count 4 --seed 3 --workers 2");
  ASSERT_EQ(again.exit_code, 0) << again.err;
  EXPECT_EQ(hash_tree(root / "r1"), hash_tree(root / "r2"));
}

TEST_F(CliTest, RenderMattesWithoutMeshesIsValidationError) {
  fs::create_directories(root / "empty");
  const auto r = cli("render-mattes --meshes " + p("empty") + " --out " + p("r") + " --count 2");
  EXPECT_EQ(r.exit_code, 1);
  const auto j = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
  EXPECT_EQ(j["error"], "validation");
  EXPECT_FALSE(fs::exists(root / "r" / "scenes.csv"));
}

TEST_F(CliTest, SynthesizeProducesTripletsAndManifest) {
  const auto r = cli(synth("d", "--count 5 --seed 9"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("triplets/s"), std::string::npos);
  for (const char* sub : {"shadow", "shadow_free", "matte"}) EXPECT_EQ(png_count(root / "d" / sub), 5u);
  const csv::Table t = table(root / "d" / "manifest.csv");
  ASSERT_EQ(t.rows.size(), 5u);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row[t.column("seed")], "9");
    EXPECT_EQ(row[t.column("strategy")], "proposed");
    EXPECT_EQ(row[t.column("background")].substr(0, 2), "bg");
  }
}

TEST_F(CliTest, SynthesizeIsWorkerInvariant) {
  ASSERT_EQ(cli(synth("a", "--count 6 --seed 5 --workers 1")).exit_code, 0);
  ASSERT_EQ(cli(synth("b", "--count 6 --seed 5 --workers 3")).exit_code, 0);
  EXPECT_EQ(hash_tree(root / "a"), hash_tree(root / "b"));
}

TEST_F(CliTest, SynthesizeRenderOnline) {
  const auto r = cli("synthesize --render-online --config " + p("small.ini") + " --backgrounds " + p("backgrounds") +
                     " --meshes " + p("meshes") + " --out " + p("o") + " --count 2 --seed 4");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const csv::Table t = table(root / "o" / "manifest.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][t.column("matte")], "online-000001");
  EXPECT_EQ(load_matte(root / "o" / "matte" / "000000.png").width(), 64u);  // resized to the background
}

TEST_F(CliTest, GammaStrategyRecordsExponent) {
  ASSERT_EQ(cli(synth("g", "--count 4 --seed 2 --strategy gamma_correction")).exit_code, 0);
  const csv::Table t = table(root / "g" / "manifest.csv");
  for (const auto& row : t.rows) {
    EXPECT_TRUE(row[t.column("l1")].empty());
    const std::string d = row[t.column("darkening")];
    ASSERT_EQ(d.substr(0, 6), "gamma=");
    const double y = csv::parse_double(d.substr(6));
    EXPECT_GE(y, 1.5);
    EXPECT_LE(y, 3.0);
  }
}

TEST_F(CliTest, SimilarInterceptsStrategy) {
  ASSERT_EQ(cli(synth("s", "--count 4 --seed 2 --strategy similar_intercepts")).exit_code, 0);
  const csv::Table t = table(root / "s" / "manifest.csv");
  for (const auto& row : t.rows) {
    EXPECT_EQ(row[t.column("l0")], row[t.column("l1")]);
    EXPECT_EQ(row[t.column("l2")], row[t.column("l1")]);
  }
}

TEST_F(CliTest, BadStrategyIsValidationError) {
  const auto r = cli(synth("x", "--count 1 --strategy sometimes"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("\"error\""), std::string::npos);
}

TEST_F(CliTest, EstimateRecoversManifestParams) {
  ASSERT_EQ(cli(synth("d", "--count 6 --seed 21")).exit_code, 0);
  const auto r = cli("estimate --dataset " + p("d") + " --out " + p("fit.csv"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const csv::Table truth = table(root / "d" / "manifest.csv");
  const csv::Table fit = table(root / "fit.csv");
  ASSERT_EQ(fit.rows.size(), truth.rows.size());
  for (std::size_t i = 0; i < fit.rows.size(); ++i) {
    ASSERT_EQ(fit.rows[i][0], truth.rows[i][0]);
    for (const char* k : {"l0", "l1", "l2", "s1"})
      EXPECT_NEAR(csv::parse_double(fit.rows[i][fit.column(k)]), csv::parse_double(truth.rows[i][truth.column(k)]),
                  0.03)
          << k << " item " << i;
  }
}

TEST_F(CliTest, ScoreBerPerfectPrediction) {
  const auto r = cli("score --metric ber --pred " + p("mattes") + " --gt " + p("mattes"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::istringstream in(r.out);
  const csv::Table t = csv::read_table(in);
  ASSERT_EQ(t.rows.size(), 3u);
  for (const auto& row : t.rows)
    for (std::size_t c = 1; c < 4; ++c) EXPECT_EQ(csv::parse_double(row[c]), 0.0);
}

TEST_F(CliTest, ScoreRmseNeedsMask) {
  EXPECT_EQ(cli("score --pred " + p("backgrounds") + " --gt " + p("backgrounds")).exit_code, 1);
  const auto r = cli("score --pred " + p("backgrounds") + " --gt " + p("backgrounds") + " --mask " + p("backgrounds") +
                     " --pooled --out " + p("scores.csv"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(table(root / "scores.csv").rows.back()[0], "pooled");
}

TEST_F(CliTest, AugmentParams) {
  auto r = cli("augment --params 0.1,0.05,0.02,0.45 --scale 1.0");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::istringstream in(r.out);
  const csv::Table t = csv::read_table(in);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"0.1", "0.05", "0.02", "0.45", "1"}));
  EXPECT_EQ(cli("augment --params 0,0,0,0.9 --scale 1.2").exit_code, 1);
  EXPECT_EQ(cli("augment --params 0,0,0,0.5 --scale 1.5").exit_code, 1);
}

TEST_F(CliTest, AugmentManifestWithRandomScales) {
  ASSERT_EQ(cli(synth("d", "--count 4 --seed 8")).exit_code, 0);
  const auto r = cli("augment --manifest " + p("d/manifest.csv") + " --seed 1 --out " + p("aug.csv"));
  const csv::Table base = table(root / "d" / "manifest.csv");
  const csv::Table aug = table(root / "aug.csv");
  ASSERT_EQ(aug.rows.size(), base.rows.size());
  for (std::size_t i = 0; i < aug.rows.size(); ++i) {
    if (aug.rows[i][aug.column("scale")].empty()) continue;  // non-affine row
    const double scale = csv::parse_double(aug.rows[i][aug.column("scale")]);
    EXPECT_GE(scale, 0.8);
    EXPECT_LE(scale, 1.2);
    EXPECT_NEAR(csv::parse_double(aug.rows[i][aug.column("s1")]),
                scale * csv::parse_double(base.rows[i][base.column("s1")]), 1e-12);
  }
  EXPECT_TRUE(r.exit_code == 0 || r.exit_code == 2);
}

TEST_F(CliTest, DryRunWritesNothing) {
  const auto r = cli(synth("dry", "--count 3 --dry-run"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("plan:"), std::string::npos);
  EXPECT_FALSE(fs::exists(root / "dry"));
  const auto m = cli("render-mattes --meshes " + p("meshes") + " --out " + p("dry2") + " --count 3 --dry-run");
  ASSERT_EQ(m.exit_code, 0) << m.err;
  EXPECT_FALSE(fs::exists(root / "dry2"));
}

TEST_F(CliTest, ConfigAndFlagPrecedence) {
  write_text(root / "seeded.ini",
             "[run]\nseed = 77\nstrategy = zero_intercepts\n[paths]\nbackgrounds = " + (root / "backgrounds").string() +
                 "\nmattes = " + (root / "mattes").string() + "\nout = " + (root / "cfg_out").string() + "\n");
  ASSERT_EQ(cli("synthesize --config " + p("seeded.ini") + " --count 2 --seed 78").exit_code, 0);
  const csv::Table t = table(root / "cfg_out" / "manifest.csv");
  for (const auto& row : t.rows) {
    EXPECT_EQ(row[t.column("seed")], "78");
    EXPECT_EQ(csv::parse_double(row[t.column("l1")]), 0.0);
  }
  write_text(root / "broken.ini", "[run]\nsed = 1\n");
  EXPECT_EQ(cli("synthesize --config " + p("broken.ini") + " --count 1").exit_code, 1);
}
