#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace synshadow;
using namespace synshadow::testing;

namespace {

ImageRGB darken_any(const ImageRGB& x, const SlopeParams& p) { return darken(x, p); }

BatchInputs small_inputs() {
  RandomStream s(201);
  BatchInputs in;
  in.backgrounds.push_back(in_memory("bg_a.png", random_image(24, 32, s)));
  in.backgrounds.push_back(in_memory("bg_b.png", random_image(24, 32, s)));
  in.mattes.push_back(in_memory("m_a.png", random_matte(24, 32, s)));
  in.mattes.push_back(in_memory("m_b.png", random_matte(12, 16, s)));  // resized on use
  return in;
}

}  // namespace

TEST(ComposeShadow, ZeroMatteIsPassThrough) {
  RandomStream s(202);
  const ImageRGB x = random_image(16, 16, s);
  const ImageRGB out = compose_shadow(x, MatteMap(16, 16, 0.0), random_params(s));
  EXPECT_EQ(out, x);
}

TEST(ComposeShadow, FullMatteIsDarken) {
  RandomStream s(203);
  const ImageRGB x = random_image(16, 16, s);
  const SlopeParams p = random_params(s);
  EXPECT_EQ(compose_shadow(x, MatteMap(16, 16, 1.0), p), darken_any(x, p));
}

TEST(ComposeShadow, HalfMatteExample) {
  const ImageRGB out = compose_shadow(ImageRGB(1, 1, 0.8), MatteMap(1, 1, 0.5), SlopeParams::make(0, 0, 0, 0.5));
  for (double v : out.values()) EXPECT_NEAR(v, 0.6, 1e-15);
}

TEST(ComposeShadow, DimensionMismatch) {
  EXPECT_THROW(compose_shadow(ImageRGB(4, 4), MatteMap(4, 5), SlopeParams::make(0, 0, 0, 0.5)), ValidationError);
}

TEST(ComposeShadow, ConvexAndLinearInMatte) {
  RandomStream s(204);
  for (int trial = 0; trial < 100; ++trial) {
    const ImageRGB x = random_image(8, 8, s);
    const SlopeParams p = random_params(s);
    const ImageRGB d = darken(x, p);
    const MatteMap m1 = random_matte(8, 8, s), m2 = random_matte(8, 8, s);
    MatteMap mid(8, 8);
    for (std::size_t i = 0; i < mid.pixels(); ++i) mid.values()[i] = 0.5 * (m1.values()[i] + m2.values()[i]);
    const ImageRGB c1 = compose_shadow(x, m1, p), c2 = compose_shadow(x, m2, p), cm = compose_shadow(x, mid, p);
    for (std::size_t i = 0; i < x.values().size(); ++i) {
      const double lo = std::min(x.values()[i], d.values()[i]), hi = std::max(x.values()[i], d.values()[i]);
      ASSERT_GE(c1.values()[i], lo);
      ASSERT_LE(c1.values()[i], hi);
      ASSERT_LE(c1.values()[i], x.values()[i]);
      ASSERT_NEAR(cm.values()[i], 0.5 * (c1.values()[i] + c2.values()[i]), 1e-12);
    }
  }
}

TEST(ComposeShadow, UmbraRelitRecoversBackground) {
  RandomStream s(205);
  for (int trial = 0; trial < 100; ++trial) {
    const SlopeParams p = random_params(s);
    const double floor = std::max({p.l0(), p.l1(), p.l2()});
    const ImageRGB x = random_image(8, 8, s, std::nextafter(floor, 1.0), 1.0);
    const ImageRGB back = relit(compose_shadow(x, MatteMap(8, 8, 1.0), p), p);
    for (std::size_t i = 0; i < x.values().size(); ++i) ASSERT_NEAR(back.values()[i], x.values()[i], 1e-9);
  }
}

TEST(ResizeBilinear, IdentityConstantAndRange) {
  RandomStream s(206);
  const MatteMap m = random_matte(10, 12, s);
  EXPECT_EQ(resize_bilinear(m, 10, 12), m);
  const MatteMap c = resize_bilinear(MatteMap(5, 7, 0.25), 13, 3);
  for (double v : c.values()) EXPECT_DOUBLE_EQ(v, 0.25);
  const MatteMap up = resize_bilinear(m, 37, 41);
  EXPECT_EQ(up.height(), 37u);
  EXPECT_EQ(up.width(), 41u);
  for (double v : up.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(ResizeBilinear, DoublingInterpolatesBetweenCenters) {
  MatteMap m(1, 2);
  m.at(0, 0, 0) = 0.0;
  m.at(0, 1, 0) = 1.0;
  const MatteMap r = resize_bilinear(m, 1, 4);
  EXPECT_DOUBLE_EQ(r.at(0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(r.at(0, 1, 0), 0.25);
  EXPECT_DOUBLE_EQ(r.at(0, 2, 0), 0.75);
  EXPECT_DOUBLE_EQ(r.at(0, 3, 0), 1.0);
}

TEST(SynthesizeTriplet, DeterministicAndOrdered) {
  RandomStream s(207);
  const ImageRGB bg = random_image(16, 16, s);
  const MatteMap m = random_matte(8, 8, s);
  SamplerConfig cfg;
  RandomStream a = RandomStream::for_item(1, "params", 0), b = RandomStream::for_item(1, "params", 0);
  const Triplet t1 = synthesize_triplet(bg, m, cfg, a), t2 = synthesize_triplet(bg, m, cfg, b);
  EXPECT_EQ(t1.shadow, t2.shadow);
  EXPECT_EQ(t1.matte, t2.matte);
  EXPECT_EQ(std::get<SlopeParams>(t1.params), std::get<SlopeParams>(t2.params));
  EXPECT_EQ(t1.matte.height(), 16u);
  for (std::size_t i = 0; i < bg.values().size(); ++i) ASSERT_LE(t1.shadow.values()[i], t1.shadow_free.values()[i]);

  RandomStream c = RandomStream::for_item(2, "params", 0);
  const Triplet t3 = synthesize_triplet(bg, m, cfg, c);
  EXPECT_FALSE(std::get<SlopeParams>(t1.params) == std::get<SlopeParams>(t3.params));
  EXPECT_FALSE(t1.shadow == t3.shadow);
}

TEST(SynthesizeTriplet, EveryStrategyNeverBrightensWithDarkOnlyModels) {
  RandomStream s(208);
  const ImageRGB bg = random_image(16, 16, s);
  const MatteMap m = random_matte(16, 16, s);
  for (const auto& [strategy, name] : kStrategyNames) {
    SamplerConfig cfg;
    cfg.strategy = strategy;
    for (int k = 0; k < 20; ++k) {
      const Triplet t = synthesize_triplet(bg, m, cfg, s);
      for (double v : t.shadow.values()) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
      if (strategy == Strategy::color_jitter) continue;  // free matrix may brighten
      for (std::size_t i = 0; i < bg.pixels(); ++i) {
        const auto p = bg.pixel(i);
        const double top = std::max({p[0], p[1], p[2]});
        for (int ch = 0; ch < 3; ++ch) ASSERT_LE(t.shadow.pixel(i)[ch], top + 1e-12) << name;
      }
    }
  }
}

TEST(BatchSynthesize, WritesFilesAndManifest) {
  TempDir dir("batch");
  SamplerConfig cfg;
  cfg.seed = 11;
  const BatchReport r = batch_synthesize(small_inputs(), cfg, {4, dir.path(), 1});
  EXPECT_EQ(r.written, 4u);
  EXPECT_TRUE(r.failures.empty());
  for (const char* sub : {"shadow", "shadow_free", "matte"}) {
    int files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / sub)) files += e.is_regular_file();
    EXPECT_EQ(files, 4) << sub;
    EXPECT_TRUE(std::filesystem::exists(dir / sub / "000003.png"));
  }
  std::ifstream in(dir / "manifest.csv");
  const csv::Table table = csv::read_table(in);
  EXPECT_EQ(table.header, manifest_header());
  ASSERT_EQ(table.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(table.rows[i][0], item_stem(i));
    EXPECT_EQ(table.rows[i][7], "11");
    const SlopeParams p = SlopeParams::make(csv::parse_double(table.rows[i][3]), csv::parse_double(table.rows[i][4]),
                                            csv::parse_double(table.rows[i][5]), csv::parse_double(table.rows[i][6]));
    EXPECT_LE(p.slope(), 1.0);
  }
  const ImageRGB shadow = load_image(dir / "shadow" / "000000.png");
  EXPECT_EQ(shadow.height(), 24u);
  EXPECT_EQ(shadow.width(), 32u);
}

TEST(BatchSynthesize, RerunIdenticalAndPrefixStable) {
  TempDir a("batch_a"), b("batch_b"), c("batch_c"), d("batch_d");
  SamplerConfig cfg;
  cfg.seed = 12;
  batch_synthesize(small_inputs(), cfg, {4, a.path(), 1});
  batch_synthesize(small_inputs(), cfg, {4, b.path(), 3});
  batch_synthesize(small_inputs(), cfg, {2, c.path(), 1});
  EXPECT_EQ(hash_tree(a.path()), hash_tree(b.path()));
  const auto full = hash_tree(a.path()), prefix = hash_tree(c.path());
  for (const auto& [name, hash] : prefix) {
    if (name == "manifest.csv") continue;
    ASSERT_TRUE(full.contains(name)) << name;
    EXPECT_EQ(full.at(name), hash) << name;
  }
  const std::string m4 = read_bytes(a / "manifest.csv"), m2 = read_bytes(c / "manifest.csv");
  EXPECT_EQ(m4.substr(0, m2.size()), m2);
  cfg.seed = 13;
  batch_synthesize(small_inputs(), cfg, {4, d.path(), 1});
  EXPECT_NE(hash_tree(a.path()), hash_tree(d.path()));
}

TEST(BatchSynthesize, ItemFailuresAreReportedAndSkipped) {
  TempDir dir("batch_fail");
  BatchInputs in = small_inputs();
  in.backgrounds = {in.backgrounds[0], background_file(dir / "does_not_exist.png")};
  SamplerConfig cfg;
  cfg.seed = 14;
  const BatchReport r = batch_synthesize(in, cfg, {16, dir.path(), 2});
  EXPECT_EQ(r.written + r.failures.size(), 16u);
  EXPECT_GT(r.failures.size(), 0u);
  EXPECT_GT(r.written, 0u);
  std::ifstream manifest(dir / "manifest.csv");
  EXPECT_EQ(csv::read_table(manifest).rows.size(), r.written);
}

TEST(BatchSynthesize, EmptyInputsRejected) {
  TempDir dir("batch_empty");
  BatchInputs in = small_inputs();
  in.mattes.clear();
  EXPECT_THROW(batch_synthesize(in, SamplerConfig{}, {2, dir.path(), 1}), ValidationError);
}

TEST(ChoosePair, DrawsEveryCombination) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const PairChoice c = choose_pair(3, i, 3, 2);
    ASSERT_LT(c.background, 3u);
    ASSERT_LT(c.matte, 2u);
    seen.insert({c.background, c.matte});
  }
  EXPECT_EQ(seen.size(), 6u);
}
