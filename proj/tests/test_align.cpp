#include <doctest.h>

#include <bit>
#include <random>

#include "amodal/align.hpp"
#include "oracles.hpp"

using namespace amodal;

namespace {

DepthMap row(std::initializer_list<double> values) {
  DepthMap d(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) d(0, i++) = v;
  return d;
}

Mask all(const DepthMap& d) { return Mask::Constant(d.rows(), d.cols(), true); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST_SUITE("align") {

TEST_CASE("fit_scale_shift examples") {
  const DepthMap b = row({0.2, 0.4, 0.6});
  const AffineFit f = fit_scale_shift(b, row({0.5, 0.9, 1.3}), all(b));
  CHECK(f.s == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.t == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(f.rmse_residual < 1e-15);
  CHECK(f.n_pixels == 3);

  const AffineFit id = fit_scale_shift(b, b, all(b));
  CHECK(id.s == 1.0);
  CHECK(id.t == 0.0);
  CHECK(id.rmse_residual == 0.0);

  // Extended-precision oracle: s = 1, t = 0.0333...
  const DepthMap src = row({0, 0.5, 1});
  const DepthMap dst = row({0, 0.6, 1});
  const oracle::Pair ref = oracle::normal_equations(src, dst, all(src));
  const AffineFit g = fit_scale_shift(src, dst, all(src));
  CHECK(std::abs(g.s - 1.0) < 1e-15);
  CHECK(std::abs(g.t - 0.033333333333333326) < 1e-15);
  CHECK(std::abs(g.s - static_cast<double>(ref.s)) < 1e-15);
  CHECK(std::abs(g.t - static_cast<double>(ref.t)) < 1e-15);
}

TEST_CASE("fit_scale_shift errors") {
  const DepthMap b = row({0.2, 0.4, 0.6});
  Mask one = Mask::Constant(1, 3, false);
  one(0, 1) = true;
  CHECK(kind_of([&] { fit_scale_shift(b, b, one); }) == ErrorKind::InsufficientSupport);
  CHECK(kind_of([&] { fit_scale_shift(b, b, Mask::Constant(1, 3, false)); }) ==
        ErrorKind::InsufficientSupport);
  const DepthMap flat = row({0.3, 0.3, 0.3});
  CHECK(kind_of([&] { fit_scale_shift(flat, b, all(b)); }) == ErrorKind::DegenerateSupport);
  CHECK(kind_of([&] { fit_scale_shift(row({0.5, 0.5 + 1e-13}), row({0, 1}), Mask::Constant(1, 2, true)); }) ==
        ErrorKind::DegenerateSupport);
  CHECK(kind_of([&] { fit_scale_shift(b, row({1, 2}), all(b)); }) == ErrorKind::DimensionError);
  // Flat on the support, varied elsewhere.
  const DepthMap partly = row({0.3, 0.3, 0.9});
  Mask first_two = Mask::Constant(1, 3, true);
  first_two(0, 2) = false;
  CHECK(kind_of([&] { fit_scale_shift(partly, b, first_two); }) == ErrorKind::DegenerateSupport);
}

TEST_CASE("affine recovery on random maps") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  for (int k = 0; k < 300; ++k) {
    const DepthMap d = oracle::random_depth(rng, 8, 9, 0.0, 1.0);
    const double s = scale(rng);
    const double t = shift(rng);
    const AffineFit f = fit_scale_shift(d, s * d + t, all(d));
    CHECK(std::abs(f.s - s) <= 1e-9 * std::abs(s));
    CHECK(std::abs(f.t - t) <= 1e-9 * std::max(1.0, std::abs(t)));
  }
}

TEST_CASE("fit is the least-squares minimiser") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int k = 0; k < 30; ++k) {
    const DepthMap b = oracle::random_depth(rng, 6, 6, 0.0, 1.0);
    DepthMap o = 1.7 * b + 0.2;
    for (Eigen::Index i = 0; i < o.size(); ++i) o.data()[i] += noise(rng);
    const Mask m = oracle::random_mask(rng, 6, 6, 0.7);
    const AffineFit f = fit_scale_shift(b, o, m);

    const oracle::Pair ref = oracle::normal_equations(b, o, m);
    CHECK(std::abs(f.s - static_cast<double>(ref.s)) < 1e-10);
    CHECK(std::abs(f.t - static_cast<double>(ref.t)) < 1e-10);

    const long double best = oracle::sse(b, o, m, f.s, f.t);
    for (double eps : {1e-3, 1e-5}) {
      for (auto [ds, dt] : {std::pair{eps, 0.0}, {-eps, 0.0}, {0.0, eps}, {0.0, -eps}, {eps, eps}, {eps, -eps}}) {
        CHECK(oracle::sse(b, o, m, f.s + ds, f.t + dt) >= best);
      }
    }
    const long double n = static_cast<long double>(popcount(m));
    CHECK(std::abs(f.rmse_residual - static_cast<double>(std::sqrt(best / n))) < 1e-12);
  }
}

TEST_CASE("fit matches the grid-search oracle") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> noise(0.0, 0.02);
  for (int k = 0; k < 10; ++k) {
    const DepthMap b = oracle::random_depth(rng, 4, 5, 0.0, 1.0);
    DepthMap o = 0.8 * b + 0.3;
    for (Eigen::Index i = 0; i < o.size(); ++i) o.data()[i] += noise(rng);
    const AffineFit f = fit_scale_shift(b, o, all(b));
    const oracle::Pair g = oracle::grid_search_fit(b, o, all(b), -20, 20, -20, 20, 1e-7L);
    CHECK(std::abs(f.s - static_cast<double>(g.s)) < 1e-6);
    CHECK(std::abs(f.t - static_cast<double>(g.t)) < 1e-6);
  }
}

TEST_CASE("apply_affine examples") {
  const AffineResult a = apply_affine(row({0.2, 0.4}), AffineFit{2.0, 0.1, 0.0, 2});
  CHECK(a.depth(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a.depth(0, 1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(a.clamped == 0);

  std::mt19937_64 rng(1);
  const DepthMap d = oracle::random_depth(rng, 3, 4, 0.0, 2.0);
  const AffineResult id = apply_affine(d, AffineFit{1.0, 0.0, 0.0, 12});
  CHECK((id.depth == d).all());
  CHECK(id.depth.rows() == 3);

  const AffineResult c = apply_affine(row({0.1}), AffineFit{1.0, -0.5, 0.0, 2});
  CHECK(c.depth(0, 0) == 0.0);
  CHECK(c.clamped == 1);
}

TEST_CASE("blend_prediction examples") {
  // 3-pixel toy: fit over the two visible pixels, fill the occluded one.
  const DepthMap observed = row({1.0, 1.2, 9.9});
  const DepthMap predicted = row({0.5, 0.6, 0.7});
  Mask amodal = Mask::Constant(1, 3, true);
  Mask visible = amodal;
  visible(0, 2) = false;
  const BlendResult r = blend_prediction(observed, predicted, amodal, visible);
  const oracle::Pair g = oracle::grid_search_fit(predicted, observed, visible, -10, 10, -10, 10, 1e-7L);
  CHECK(std::abs(static_cast<double>(g.s) - 2.0) < 1e-6);
  CHECK(std::abs(static_cast<double>(g.t)) < 1e-6);
  CHECK(r.fit.s == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(r.fit.t) < 1e-14);
  CHECK(r.depth(0, 0) == 1.0);
  CHECK(r.depth(0, 1) == 1.2);
  CHECK(r.depth(0, 2) == doctest::Approx(1.4).epsilon(1e-14));

  std::mt19937_64 rng(31);
  const DepthMap obs = oracle::random_depth(rng, 8, 8, 0.1, 1.0);
  Mask am = Mask::Constant(8, 8, false);
  am.block(1, 1, 6, 6).setConstant(true);
  Mask vis = am;
  vis.block(2, 2, 3, 3).setConstant(false);
  const BlendResult same = blend_prediction(obs, obs, am, vis);
  CHECK((same.depth == obs).all());

  const BlendResult affine = blend_prediction(obs, 0.5 * obs + 0.2, am, vis);
  CHECK((affine.depth - obs).abs().maxCoeff() < 1e-12);
}

TEST_CASE("blend_prediction errors and visible preservation") {
  std::mt19937_64 rng(37);
  for (int k = 0; k < 50; ++k) {
    const DepthMap obs = oracle::random_depth(rng, 7, 6, 0.0, 1.0);
    const DepthMap pred = oracle::random_depth(rng, 7, 6, 0.0, 1.0);
    const Mask am = oracle::random_mask(rng, 7, 6, 0.8);
    const Mask vis = mask_and(am, oracle::random_mask(rng, 7, 6, 0.5));
    if (popcount(vis) < 3) continue;
    const BlendResult r = blend_prediction(obs, pred, am, vis);
    const Mask occluded = mask_and_not(am, vis);
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
      if (occluded.data()[i]) {
        CHECK(r.depth.data()[i] == std::max(0.0, r.fit.s * pred.data()[i] + r.fit.t));
      } else {
        CHECK(std::bit_cast<std::uint64_t>(r.depth.data()[i]) == std::bit_cast<std::uint64_t>(obs.data()[i]));
      }
    }
  }

  const DepthMap d = row({0.1, 0.2, 0.3});
  Mask am = Mask::Constant(1, 3, true);
  Mask vis = Mask::Constant(1, 3, false);
  vis(0, 0) = true;
  CHECK(kind_of([&] { blend_prediction(d, d, am, vis); }) == ErrorKind::InsufficientSupport);
  vis(0, 1) = true;
  CHECK(kind_of([&] { blend_prediction(d, row({0.5, 0.5, 0.9}), am, vis); }) == ErrorKind::DegenerateSupport);
  Mask outside = Mask::Constant(1, 3, false);
  outside(0, 0) = outside(0, 1) = true;
  Mask small = Mask::Constant(1, 3, false);
  small(0, 0) = true;
  CHECK(kind_of([&] { blend_prediction(d, d, small, outside); }) == ErrorKind::InvariantViolation);
}

}  // TEST_SUITE
