#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "textseg/attribution.hpp"
#include "textseg/rng.hpp"
#include "textseg/synthetic_encoder.hpp"

using namespace textseg;

namespace {

ImageTensor noise_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  ImageTensor img(h, w, 3);
  for (auto& p : img.pixels) p = rng.uniform();
  return img;
}

struct PlantedSetup {
  std::shared_ptr<SyntheticEncoder> enc;
  PlantedRegion region;
  ImageTensor image;
  Eigen::VectorXd text;
};

PlantedSetup make_setup(std::uint64_t seed) {
  PlantedSetup s;
  s.region = {5, 5, 3, 3, "planted target region"};
  s.enc = make_synthetic_encoder(seed, 256, s.region);
  s.image = noise_image(112, 112, seed + 500);
  s.text = s.enc->text_embedding({s.region.prompt_text, "", "P0"});
  return s;
}

double mean_inside(const SaliencyMap& sal, const BinaryMask& region, bool inside) {
  double sum = 0.0;
  int n = 0;
  for (int r = 0; r < sal.values.rows(); ++r)
    for (int c = 0; c < sal.values.cols(); ++c)
      if ((region(r, c) != 0) == inside) {
        sum += sal.values(r, c);
        ++n;
      }
  return sum / n;
}

}  // namespace

TEST_CASE("upsampling: constants and 1x1 grids stay constant") {
  RealMap grid(3, 4, 0.7);
  const RealMap up = saliency_to_image_space(grid, 50, 60);
  CHECK(up.rows() == 50);
  for (double v : up.data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));

  RealMap single(1, 1, 0.42);
  const RealMap one = saliency_to_image_space(single, 17, 13);
  for (double v : one.data()) CHECK(v == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("upsampling: 2x2 grid at exact 2x matches the bilinear formula") {
  RealMap grid(2, 2);
  grid(0, 0) = 0.1;
  grid(0, 1) = 0.5;
  grid(1, 0) = 0.9;
  grid(1, 1) = 0.3;
  const RealMap up = saliency_to_image_space(grid, 4, 4);

  const double expected[4][4] = {{0.1, 0.2, 0.4, 0.5},
                                 {0.3, 0.3375, 0.4125, 0.45},
                                 {0.7, 0.6125, 0.4375, 0.35},
                                 {0.9, 0.75, 0.45, 0.3}};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      CHECK(up(r, c) == doctest::Approx(expected[r][c]).epsilon(1e-12));

  // Corner pixels equal corner patch values.
  CHECK(up(0, 0) == 0.1);
  CHECK(up(0, 3) == 0.5);
  CHECK(up(3, 0) == 0.9);
  CHECK(up(3, 3) == 0.3);
}

TEST_CASE("saliency: planted region out-scores the background") {
  const PlantedSetup s = make_setup(3);
  BottleneckConfig cfg;
  cfg.seed = 3;
  const SaliencyMap sal = compute_saliency(*s.enc, s.image, s.text, cfg, "planted");
  CHECK(sal.values.rows() == 112);
  CHECK(sal.prompt_id == "planted");

  const BinaryMask gt = planted_pixel_mask(s.region, 14, 14, 112, 112);
  CHECK(mean_inside(sal, gt, true) > mean_inside(sal, gt, false));
  for (double v : sal.values.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("saliency: mass shrinks as gamma grows") {
  const PlantedSetup s = make_setup(4);
  double prev = std::numeric_limits<double>::infinity();
  for (double gamma : {0.0, 0.1, 1.0, 10.0}) {
    BottleneckConfig cfg;
    cfg.gamma = gamma;
    cfg.seed = 4;
    const SaliencyMap sal = compute_saliency(*s.enc, s.image, s.text, cfg);
    double mass = 0.0;
    for (double v : sal.values.data()) mass += v;
    CHECK(mass <= prev + 1e-9);
    prev = mass;
  }
}

TEST_CASE("saliency: no compression pressure keeps nearly everything") {
  const PlantedSetup s = make_setup(5);
  BottleneckConfig cfg;
  cfg.gamma = 0.0;
  cfg.seed = 5;
  const SaliencyMap sal = compute_saliency(*s.enc, s.image, s.text, cfg);
  double mean = 0.0;
  for (double v : sal.values.data()) mean += v;
  mean /= double(sal.values.size());
  CHECK(mean > 0.9);
}

TEST_CASE("saliency: bitwise deterministic given the seed") {
  const PlantedSetup s = make_setup(6);
  BottleneckConfig cfg;
  cfg.seed = 99;
  const SaliencyMap a = compute_saliency(*s.enc, s.image, s.text, cfg);
  const SaliencyMap b = compute_saliency(*s.enc, s.image, s.text, cfg);
  CHECK(a.values == b.values);

  cfg.seed = 100;
  const SaliencyMap c = compute_saliency(*s.enc, s.image, s.text, cfg);
  CHECK_FALSE(a.values == c.values);
}

TEST_CASE("saliency: monotone line-search trace never decreases") {
  const PlantedSetup s = make_setup(7);
  BottleneckConfig cfg;
  cfg.seed = 7;
  cfg.monotone_line_search = true;
  std::vector<double> trace;
  compute_saliency(*s.enc, s.image, s.text, cfg, "", &trace);
  REQUIRE(trace.size() == size_t(cfg.steps));
  for (size_t i = 1; i < trace.size(); ++i) {
    CHECK(std::isfinite(trace[i]));
    CHECK(trace[i] >= trace[i - 1] - 1e-12);
  }
}

TEST_CASE("saliency: encoder without patch features is rejected") {
  struct PoolOnly : Encoder {
    int dim() const override { return 8; }
    std::string params_version() const override { return "pool-only"; }
    std::pair<int, int> patch_grid() const override { return {0, 0}; }
    Eigen::MatrixXd patch_embeddings(const ImageTensor&) const override {
      throw std::runtime_error("no patches");
    }
    Eigen::VectorXd image_embedding(const ImageTensor&) const override {
      return Eigen::VectorXd::Unit(8, 0);
    }
    Eigen::VectorXd text_embedding(const TextPrompt&) const override {
      return Eigen::VectorXd::Unit(8, 0);
    }
    Eigen::VectorXd pool_patches(const Eigen::MatrixXd&) const override {
      throw std::runtime_error("no patches");
    }
  } enc;
  BottleneckConfig cfg;
  CHECK_THROWS_WITH_AS(
      compute_saliency(enc, ImageTensor(8, 8, 3, 0.5), Eigen::VectorXd::Unit(8, 0), cfg),
      "attribution requires patch-level features", std::runtime_error);
}

TEST_CASE("bottleneck config validation") {
  BottleneckConfig cfg;
  cfg.gamma = -0.1;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.steps = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.noise_samples = 0;
  CHECK_THROWS(cfg.validate());
}
