#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "survfuse/error.hpp"
#include "survfuse/fusion.hpp"
#include "survfuse/metrics.hpp"
#include "survfuse/rng.hpp"
#include "survfuse/synthetic.hpp"

using namespace survfuse;

namespace {

bool same_order(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if ((a[i] < a[j]) != (b[i] < b[j])) return false;
    }
  }
  return true;
}

MultimodalSample sample(std::size_t n, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.modality_plan = ModalityPlan{};
  return gen_multimodal(spec);
}

std::vector<double> noisy(const std::vector<double>& v, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(v);
  for (double& x : out) x += sd * rng.normal();
  return out;
}

}  // namespace

TEST_CASE("single modality keeps its ranking") {
  const MultimodalSample s = sample(200, 1);
  const auto labels = s.dataset.labels();
  const auto clin = noisy(s.clin_view, 0.5, 2);
  const FusionModel m = fit_fusion({{Modality::Clin, clin}}, labels);
  REQUIRE(m.inner.coefficients(0) > 0.0);
  const auto fused = predict_fused(m, ModalityScores{{Modality::Clin, clin}});
  CHECK(same_order(fused, clin));

  std::vector<double> stretched(clin);
  for (double& x : stretched) x = std::exp(x);
  const FusionModel e = fit_fusion({{Modality::Clin, stretched}}, labels);
  CHECK(c_index(predict_fused(e, ModalityScores{{Modality::Clin, stretched}}), labels) == c_index(clin, labels));
}

TEST_CASE("identical modalities with the ridge guard") {
  const MultimodalSample s = sample(150, 3);
  const auto labels = s.dataset.labels();
  const auto v = noisy(s.true_risk, 0.5, 4);
  const ModalityScores scores{{Modality::Clin, v}, {Modality::Img, v}};
  const FusionModel m = fit_fusion(scores, labels);
  CHECK(same_order(predict_fused(m, scores), v));
}

TEST_CASE("constant PESI column falls back to the multimodal ranking") {
  const MultimodalSample s = sample(300, 5);
  const auto labels = s.dataset.labels();
  const auto clin = noisy(s.clin_view, 0.7, 6);
  const auto img = noisy(s.img_view, 0.7, 7);
  const ModalityScores two{{Modality::Clin, clin}, {Modality::Img, img}};
  ModalityScores three = two;
  three[Modality::Pesi] = std::vector(clin.size(), 85.0);
  const FusionModel a = fit_fusion(two, labels);
  const FusionModel b = fit_fusion(three, labels);
  CHECK(b.inner.coefficients(2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(b.covariate_sources == std::vector{Modality::Clin, Modality::Img, Modality::Pesi});
  CHECK(c_index(predict_fused(b, three), labels) ==
        doctest::Approx(c_index(predict_fused(a, two), labels)).epsilon(1e-9));
}

TEST_CASE("complementary views fuse better than either alone") {
  const MultimodalSample s = sample(2000, 8);
  const auto labels = s.dataset.labels();
  const auto clin = noisy(s.clin_view, 0.6, 9);
  const auto img = noisy(s.img_view, 0.6, 10);
  const std::vector<SurvivalLabel> train(labels.begin(), labels.begin() + 1600);
  const std::vector<SurvivalLabel> test(labels.begin() + 1600, labels.end());
  auto head = [](const std::vector<double>& v) { return std::vector<double>(v.begin(), v.begin() + 1600); };
  auto tail = [](const std::vector<double>& v) { return std::vector<double>(v.begin() + 1600, v.end()); };
  const FusionModel m = fit_fusion({{Modality::Clin, head(clin)}, {Modality::Img, head(img)}}, train);
  const double fused = c_index(predict_fused(m, ModalityScores{{Modality::Clin, tail(clin)}, {Modality::Img, tail(img)}}), test);
  const double c1 = c_index(tail(clin), test);
  const double c2 = c_index(tail(img), test);
  CHECK(fused >= std::max(c1, c2) - 0.01);
  CHECK(fused >= std::min(c1, c2) + 0.02);
}

TEST_CASE("prediction input checks") {
  const MultimodalSample s = sample(100, 11);
  const auto labels = s.dataset.labels();
  const FusionModel m = fit_fusion({{Modality::Clin, s.clin_view}, {Modality::Img, s.img_view}}, labels);
  auto kind = [&](const std::map<Modality, double>& row) {
    try {
      predict_fused(m, row);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Stage;
  };
  CHECK(kind({{Modality::Clin, 0.1}}) == ErrorKind::MissingModality);
  CHECK(kind({{Modality::Clin, 0.1}, {Modality::Img, 0.2}, {Modality::Pesi, 80}}) == ErrorKind::ExtraModality);

  FusionModel zero = m;
  zero.inner.coefficients.setZero();
  CHECK(predict_fused(zero, {{Modality::Clin, 3.0}, {Modality::Img, -1.0}}) == 0.0);

  try {
    fit_fusion({{Modality::Clin, std::vector(5, 0.0)}}, labels);
    FAIL("expected MismatchedLengths");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MismatchedLengths);
  }
}
