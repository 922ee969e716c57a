// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mriunroll/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "mriunroll/errors.hpp"

namespace mriunroll {
namespace {

std::vector<double> magnitude(const ComplexTensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = std::abs(x[i]);
  return out;
}

void require_image_pair(const ComplexTensor& ref, const ComplexTensor& rec, const char* what) {
  require_same_shape(ref, rec, what);
  if (ref.rank() != 2) throw DimensionError(std::string(what) + " expects (H, W) images");
}

constexpr int kWin = 7;

std::array<double, kWin * kWin> gaussian_window() {
  std::array<double, kWin * kWin> w{};
  double total = 0.0;
  for (int i = 0; i < kWin; ++i) {
    for (int j = 0; j < kWin; ++j) {
      const double di = i - kWin / 2, dj = j - kWin / 2;
      w[i * kWin + j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      total += w[i * kWin + j];
    }
  }
  for (auto& v : w) v /= total;
  return w;
}

}  // namespace

double psnr(const ComplexTensor& ref, const ComplexTensor& rec) {
  require_image_pair(ref, rec, "psnr");
  const auto a = magnitude(ref), b = magnitude(rec);
  double peak = 0.0, se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    peak = std::max(peak, a[i]);
    se += (a[i] - b[i]) * (a[i] - b[i]);
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double rmse = std::sqrt(se / static_cast<double>(a.size()));
  return 20.0 * std::log10(peak / rmse);
}

double nrmse(const ComplexTensor& ref, const ComplexTensor& rec) {
  require_image_pair(ref, rec, "nrmse");
  const auto a = magnitude(ref), b = magnitude(rec);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

double ssim(const ComplexTensor& ref, const ComplexTensor& rec) {
  require_image_pair(ref, rec, "ssim");
  const std::size_t h = ref.dim(0), w = ref.dim(1);
  if (h < kWin || w < kWin) throw DimensionError("ssim needs images of at least 7x7");
  const auto a = magnitude(ref), b = magnitude(rec);
  const double range = *std::max_element(a.begin(), a.end());
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  static const auto win = gaussian_window();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + kWin <= h; ++i) {
    for (std::size_t j = 0; j + kWin <= w; ++j) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int di = 0; di < kWin; ++di) {
        for (int dj = 0; dj < kWin; ++dj) {
          const double g = win[di * kWin + dj];
          const double va = a[(i + di) * w + j + dj], vb = b[(i + di) * w + j + dj];
          ma += g * va;
          mb += g * vb;
          saa += g * va * va;
          sbb += g * vb * vb;
          sab += g * va * vb;
        }
      }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.std += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(values.size()));
  return s;
}

nlohmann::json MetricSet::to_json() const {
  auto pack = [](const Summary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
  return {{"count", psnr.size()},
          {"psnr", pack(psnr_summary())},
          {"ssim", pack(ssim_summary())},
          {"nrmse", pack(nrmse_summary())},
          {"per_item", {{"psnr", psnr}, {"ssim", ssim}, {"nrmse", nrmse}}}};
}

MetricSet evaluate(const Reconstructor& reconstruct, std::span<const Sample> samples) {
  MetricSet m;
  for (const auto& s : samples) {
    const ComplexTensor rec = reconstruct(s);
    m.psnr.push_back(psnr(s.target, rec));
    m.ssim.push_back(ssim(s.target, rec));
    m.nrmse.push_back(nrmse(s.target, rec));
  }
  return m;
}

MetricSet evaluate_network(UnrolledNetwork& net, std::span<const Sample> samples, int n_inf) {
  return evaluate(
      [&](const Sample& s) { return forward_full(net, *s.model, s.kspace, n_inf); }, samples);
}

MetricSet evaluate_cs(std::span<const Sample> samples, const CsConfig& cfg) {
  return evaluate([&](const Sample& s) { return cs_reconstruct(*s.model, s.kspace, cfg).image; },
                  samples);
}

std::vector<SweepRow> inference_sweep(UnrolledNetwork& net, std::span<const Sample> samples) {
  std::vector<SweepRow> rows;
  const int n = net.iterations();
  std::vector<MetricSet> sets(static_cast<std::size_t>(n));
  // One pass per item, reading off every intermediate iterate.
  for (const auto& s : samples) {
    Tape scratch(std::make_shared<ActivationMeter>(), /*recording=*/false);
    const ComplexTensor ahy = adjoint_A(*s.model, s.kspace);
    Var h = Var::constant(ahy);
    for (int i = 0; i < n; ++i) {
      h = forward_iteration(scratch, net, i, h, *s.model, s.kspace, ahy);
      auto& m = sets[static_cast<std::size_t>(i)];
      m.psnr.push_back(psnr(s.target, h.value()));
      m.ssim.push_back(ssim(s.target, h.value()));
      m.nrmse.push_back(nrmse(s.target, h.value()));
    }
  }
  for (int i = 0; i < n; ++i) {
    const auto& m = sets[static_cast<std::size_t>(i)];
    rows.push_back({i + 1, m.psnr_summary(), m.ssim_summary(), m.nrmse_summary()});
  }
  return rows;
}

LambdaChoice tune_cs_lambda(std::span<const Sample> samples, const std::vector<double>& grid,
                            CsConfig cfg) {
  if (grid.empty()) throw ConfigError("lambda grid is empty");
  LambdaChoice best{grid.front(), {}};
  double best_score = -std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    cfg.lambda = lambda;
    const double score = evaluate_cs(samples, cfg).psnr_summary().mean;
    best.scores.emplace_back(lambda, score);
    if (score > best_score) {
      best_score = score;
      best.lambda = lambda;
    }
  }
  return best;
}

}  // namespace mriunroll
