#include "amodal/selfcheck.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "amodal/align.hpp"
#include "amodal/compose.hpp"
#include "amodal/geometry.hpp"
#include "amodal/io.hpp"
#include "amodal/metrics.hpp"
#include "amodal/objectives.hpp"

namespace amodal {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

DepthMap random_depth(Rng& rng, int rows, int cols, double lo = 0.0, double hi = 1.0) {
  DepthMap d(rows, cols);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = uniform(rng, lo, hi);
  return d;
}

Mask random_mask(Rng& rng, int rows, int cols, double p) {
  Mask m(rows, cols);
  std::bernoulli_distribution coin(p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng);
  return m;
}

Eigen::VectorXd random_vector(Rng& rng, int dim) {
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x(i) = uniform(rng, -1.0, 1.0);
  return x;
}

Mask mask_from_bits(unsigned bits, int rows, int cols) {
  Mask m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (bits >> i) & 1u;
  return m;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

// Each check returns an empty string on success, else the failure detail.
using Check = std::function<std::string(Rng&)>;

std::string mask_laws(Rng&) {
  for (unsigned a = 0; a < 512; ++a) {
    const Mask ma = mask_from_bits(a, 3, 3);
    if (!(mask_and(ma, ma) == ma).all()) return "idempotence fails";
    for (unsigned b = 0; b < 512; ++b) {
      const Mask mb = mask_from_bits(b, 3, 3);
      const Mask lhs = !mask_and(ma, mb);
      const Mask rhs = mask_or(Mask(!ma), Mask(!mb));
      if (!(lhs == rhs).all()) return "De Morgan fails";
      if (!(mask_and_not(ma, mb) == mask_and(ma, Mask(!mb))).all()) return "and_not != and(a, not b)";
      if (popcount(mask_and(ma, mb)) + popcount(mask_and_not(ma, mb)) != popcount(ma)) {
        return "popcount partition fails";
      }
    }
  }
  return {};
}

std::string normalize_idempotent(Rng& rng) {
  for (int k = 0; k < 100; ++k) {
    const DepthMap d = random_depth(rng, uniform_int(rng, 1, 16), uniform_int(rng, 2, 16), 0.0, 5.0);
    const NormalizedDepth once = normalize_unit(d);
    if (once.constant) continue;
    const NormalizedDepth twice = normalize_unit(once.depth);
    if (!(twice.depth == once.depth).all()) return "normalize(normalize(d)) != normalize(d)";
    if (once.depth.minCoeff() != 0.0 || once.depth.maxCoeff() != 1.0) return "range is not [0, 1]";
  }
  return {};
}

std::string depth_roundtrip(Rng& rng) {
  for (int k = 0; k < 50; ++k) {
    DepthMap d = random_depth(rng, uniform_int(rng, 1, 20), uniform_int(rng, 1, 20), 0.0, 100.0);
    d = d.cast<float>().cast<double>();
    const std::string bytes = encode_pfm(d);
    const DepthMap back = decode_pfm(bytes);
    if (back.rows() != d.rows() || back.cols() != d.cols() || !(back == d).all()) return "values differ";
    if (encode_pfm(back) != bytes) return "bytes differ";
    const Mask m = random_mask(rng, static_cast<int>(d.rows()), static_cast<int>(d.cols()), 0.5);
    if (!(decode_pgm(encode_pgm(m)) == m).all()) return "mask roundtrip differs";
  }
  return {};
}

std::string unproject_inverse(Rng& rng) {
  for (int k = 0; k < 20; ++k) {
    const CameraIntrinsics cam{uniform(rng, 50, 500), uniform(rng, 50, 500), uniform(rng, 0, 32),
                               uniform(rng, 0, 32)};
    const DepthMap d = random_depth(rng, 24, 32, 0.1, 10.0);
    const Mask region = random_mask(rng, 24, 32, 0.6);
    const Eigen::Matrix3Xd pts = unproject(d, cam, region);
    const Eigen::Matrix2Xd uv = project(pts, cam);
    Eigen::Index col = 0;
    for (Eigen::Index v = 0; v < d.rows(); ++v) {
      for (Eigen::Index u = 0; u < d.cols(); ++u) {
        if (!region(v, u)) continue;
        const double du = std::abs(uv(0, col) - static_cast<double>(u));
        const double dv = std::abs(uv(1, col) - static_cast<double>(v));
        if (du > 1e-9 * std::max(1.0, static_cast<double>(u)) ||
            dv > 1e-9 * std::max(1.0, static_cast<double>(v))) {
          return "pixel not recovered";
        }
        ++col;
      }
    }
  }
  return {};
}

std::string affine_recovery(Rng& rng) {
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int rows = uniform_int(rng, 2, 32);
    const int cols = uniform_int(rng, 2, 32);
    const DepthMap d = random_depth(rng, rows, cols);
    const double s = uniform(rng, 0.1, 10.0);
    const double t = uniform(rng, -1.0, 1.0);
    const AffineFit fit = fit_scale_shift(d, DepthMap(s * d + t), Mask::Constant(rows, cols, true));
    worst = std::max({worst, rel_err(fit.s, s), rel_err(fit.t, t)});
  }
  return worst <= 1e-9 ? std::string{} : "relative error " + fmt(worst);
}

std::string fit_is_minimum(Rng& rng) {
  for (int k = 0; k < 50; ++k) {
    const DepthMap b = random_depth(rng, 6, 7);
    const DepthMap o = DepthMap(uniform(rng, 0.5, 2.0) * b + uniform(rng, -0.2, 0.2)) +
                       random_depth(rng, 6, 7, -0.05, 0.05);
    const Mask support = random_mask(rng, 6, 7, 0.7);
    if (support.count() < 3) continue;
    const AffineFit fit = fit_scale_shift(b, o, support);
    auto sse = [&](double s, double t) { return (support.cast<double>() * (s * b + t - o).square()).sum(); };
    const double best = sse(fit.s, fit.t);
    for (double eps : {1e-3, 1e-5}) {
      for (auto [ds, dt] : {std::pair{eps, 0.0}, {-eps, 0.0}, {0.0, eps}, {0.0, -eps}, {eps, eps}, {-eps, eps}}) {
        if (sse(fit.s + ds, fit.t + dt) < best) return "perturbation lowers the residual";
      }
    }
  }
  return {};
}

std::string blend_preserves_visible(Rng& rng) {
  for (int k = 0; k < 50; ++k) {
    const DepthMap observed = random_depth(rng, 10, 12, 0.1, 1.0);
    const DepthMap predicted = random_depth(rng, 10, 12, 0.1, 1.0);
    const Mask amodal = random_mask(rng, 10, 12, 0.7);
    const Mask visible = mask_and(amodal, random_mask(rng, 10, 12, 0.6));
    if (visible.count() < 2) continue;
    const BlendResult r = blend_prediction(observed, predicted, amodal, visible);
    const Mask occluded = mask_and_not(amodal, visible);
    for (Eigen::Index i = 0; i < observed.size(); ++i) {
      if (!occluded.data()[i] && r.depth.data()[i] != observed.data()[i]) return "visible pixel changed";
    }
  }
  return {};
}

std::string synthetic_samples(Rng& rng) {
  const SynthRanges ranges;
  for (int k = 0; k < 20; ++k) {
    const SynthSpec spec = sample_synth_spec(ranges, rng());
    const SynthScene scene = synth_scene(spec);
    const AmodalSample s = synth_sample(spec, "check");
    for (Eigen::Index i = 0; i < s.amodal_mask.size(); ++i) {
      if (s.visible_mask.data()[i] &&
          s.observation_depth.data()[i] != scene.true_amodal_depth.data()[i]) {
        return "observed != true depth on the visible mask";
      }
      if (s.amodal_mask.data()[i] &&
          std::abs(s.gt_amodal_depth.data()[i] - scene.true_amodal_depth.data()[i]) > 1e-9) {
        return "ground truth != true amodal depth";
      }
    }
    // An affine pseudo-label is pulled back onto the exact depth.
    const DepthMap pseudo = 1.7 * scene.true_amodal_depth + 0.05;
    const AmodalSample aligned = build_sample(scene.background, scene.foreground, pseudo, "check");
    const double err = ((aligned.gt_amodal_depth - scene.true_amodal_depth).abs() *
                        aligned.amodal_mask.cast<double>()).maxCoeff();
    if (err > 1e-9) return "affine pseudo-label not recovered: " + fmt(err);
  }
  return {};
}

std::string occlusion_monotone(Rng& rng) {
  for (int k = 0; k < 50; ++k) {
    const Mask amodal = random_mask(rng, 8, 8, 0.8);
    if (amodal.count() == 0) continue;
    Mask occluder = random_mask(rng, 8, 8, 0.2);
    double last = 2.0;
    for (int step = 0; step < 5; ++step) {
      const Mask visible = mask_and_not(amodal, occluder);
      if (visible.count() == 0) break;
      const double r = visible_ratio(amodal, visible);
      if (r > last) return "visible ratio grew";
      last = r;
      occluder = mask_or(occluder, random_mask(rng, 8, 8, 0.2));
    }
  }
  return {};
}

std::string metric_properties(Rng& rng) {
  const DepthMap gt = DepthMap::Constant(4, 4, 0.5);
  const DepthMap pred = DepthMap::Constant(4, 4, 0.6);
  const SampleMetrics m = evaluate_sample(pred, gt, Mask::Constant(4, 4, true));
  if (std::abs(m.rmse_x100 - 10.0) > 1e-12 || m.delta_acc != 1.0 ||
      std::abs(m.log10_err - 0.0791812460476248) > 1e-12) {
    return "constant-map arithmetic";
  }
  if (bucket_for(0.75) != Bucket::Medium || bucket_for(0.5) != Bucket::Hard ||
      bucket_for(0.750001) != Bucket::Easy) {
    return "bucket boundaries";
  }
  for (int k = 0; k < 30; ++k) {
    const DepthMap g = random_depth(rng, 5, 6, 0.1, 1.0);
    const DepthMap p = random_depth(rng, 5, 6, 0.1, 1.0);
    const Mask mask = random_mask(rng, 5, 6, 0.7);
    if (mask.count() == 0) continue;
    double last = -1.0;
    for (double thr : {1.05, 1.25, 1.5625, 2.0, 4.0}) {
      const double acc = evaluate_sample(p, g, mask, thr).delta_acc;
      if (acc < last) return "delta accuracy not monotone in threshold";
      last = acc;
    }
    const double alpha = uniform(rng, 0.81, 1.24);
    const SampleMetrics scaled = evaluate_sample(DepthMap(alpha * g), g, mask);
    if (scaled.delta_acc != 1.0 || !(scaled.rmse_x100 > 0.0)) return "scale sensitivity";
  }
  return {};
}

std::string silog_properties(Rng& rng) {
  const SilogConfig cfg;
  for (int k = 0; k < 50; ++k) {
    const DepthMap gt = random_depth(rng, 5, 5, 0.1, 2.0);
    const double c = std::exp(uniform(rng, -2.0, 2.0));
    const double got = silog_loss(DepthMap(c * gt), gt, Mask::Constant(5, 5, true), cfg);
    if (std::abs(got - cfg.alpha * std::abs(std::log(c)) * std::sqrt(1.0 - cfg.lambda)) > 1e-9) {
      return "closed form for uniform scale";
    }
  }
  for (int k = 0; k < 20; ++k) {
    const DepthMap gt = random_depth(rng, 4, 5, 0.2, 2.0);
    DepthMap pred = random_depth(rng, 4, 5, 0.2, 2.0);
    const Mask valid = random_mask(rng, 4, 5, 0.8);
    if (valid.count() < 2) continue;
    const SilogGradient g = silog_grad(pred, gt, valid, cfg);
    const double h = 1e-5;
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      const double keep = pred.data()[i];
      pred.data()[i] = keep + h;
      const double up = silog_loss(pred, gt, valid, cfg);
      pred.data()[i] = keep - h;
      const double down = silog_loss(pred, gt, valid, cfg);
      pred.data()[i] = keep;
      const double fd = (up - down) / (2 * h);
      num += (fd - g.grad.data()[i]) * (fd - g.grad.data()[i]);
      den += g.grad.data()[i] * g.grad.data()[i];
    }
    if (std::sqrt(num) > 1e-4 * std::sqrt(den)) return "gradient disagrees with finite differences";
  }
  return {};
}

std::string flow_properties(Rng& rng) {
  for (int k = 0; k < 20; ++k) {
    const int dim = uniform_int(rng, 1, 8);
    FlowState<double> st{random_vector(rng, dim), random_vector(rng, dim), 0.0, 0.0};
    if (flow_path(st, rng) != st.x0) return "path at t=0";
    st.t = 1.0;
    if (flow_path(st, rng) != st.x1) return "path at t=1";
  }
  // Dyadic endpoints keep x1 - x0 exact, so Euler must land on x1 bit-exactly.
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd x0(4), x1(4);
    for (int i = 0; i < 4; ++i) {
      x0(i) = uniform_int(rng, -4096, 4096) / 1024.0;
      x1(i) = uniform_int(rng, -4096, 4096) / 1024.0;
    }
    const Eigen::VectorXd v = flow_target(x0, x1);
    const int n = uniform_int(rng, 1, 500);
    const Eigen::VectorXd out =
        euler_sample<double>([&](double, const Eigen::VectorXd&) { return v; }, x0, n);
    if (out != x1) return "constant field not exact at n=" + std::to_string(n);
  }
  auto linear_error = [](int n) {
    const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);
    const Eigen::VectorXd x = euler_sample<double>([](double, const Eigen::VectorXd& y) { return y; }, x0, n);
    return std::abs(x(0) - std::exp(1.0));
  };
  const double ratio = linear_error(100) / linear_error(200);
  if (ratio < 1.8 || ratio > 2.2) return "Euler error ratio " + fmt(ratio);
  if (linear_error(1000) >= 0.002) return "Euler error at n=1000";
  return {};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
  const std::vector<std::pair<const char*, Check>> checks = {
      {"mask boolean laws (3x3 exhaustive)", mask_laws},
      {"normalize_unit idempotent", normalize_idempotent},
      {"pfm/pgm roundtrip", depth_roundtrip},
      {"unproject/project inverse", unproject_inverse},
      {"scale-shift affine recovery", affine_recovery},
      {"scale-shift fit is a minimum", fit_is_minimum},
      {"blend keeps visible pixels", blend_preserves_visible},
      {"synthetic samples exact", synthetic_samples},
      {"occlusion monotonicity", occlusion_monotone},
      {"metric arithmetic and properties", metric_properties},
      {"silog closed form and gradient", silog_properties},
      {"flow path and Euler sampler", flow_properties},
  };
  std::vector<CheckResult> results;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Rng rng(seed ^ i);
    CheckResult r{checks[i].first, false, {}};
    try {
      r.detail = checks[i].second(rng);
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("threw ") + e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace amodal
