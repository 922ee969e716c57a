// Copyright 2026 The mriunroll Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "mriunroll/cs.hpp"
#include "mriunroll/network.hpp"
#include "mriunroll/train.hpp"

namespace mriunroll {

// All metrics compare magnitude images.
// 20 log10(max|ref| / rmse); +inf when the magnitudes coincide.
double psnr(const ComplexTensor& ref, const ComplexTensor& rec);
// || |rec| - |ref| || / || |ref| ||
double nrmse(const ComplexTensor& ref, const ComplexTensor& rec);
// Mean SSIM over valid 7x7 Gaussian windows (sigma 1.5), k1 = 0.01,
// k2 = 0.03, data range max|ref|.
double ssim(const ComplexTensor& ref, const ComplexTensor& rec);

struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

Summary summarize(std::span<const double> values);

struct MetricSet {
  std::vector<double> psnr;
  std::vector<double> ssim;
  std::vector<double> nrmse;

  Summary psnr_summary() const { return summarize(psnr); }
  Summary ssim_summary() const { return summarize(ssim); }
  Summary nrmse_summary() const { return summarize(nrmse); }
  nlohmann::json to_json() const;
};

using Reconstructor = std::function<ComplexTensor(const Sample&)>;

MetricSet evaluate(const Reconstructor& reconstruct, std::span<const Sample> samples);
MetricSet evaluate_network(UnrolledNetwork& net, std::span<const Sample> samples, int n_inf);
MetricSet evaluate_cs(std::span<const Sample> samples, const CsConfig& cfg);

struct SweepRow {
  int n_inf;
  Summary psnr;
  Summary ssim;
  Summary nrmse;
};

// Metrics of forward_full at every n_inf = 1..N.
std::vector<SweepRow> inference_sweep(UnrolledNetwork& net, std::span<const Sample> samples);

struct LambdaChoice {
  double lambda;
  std::vector<std::pair<double, double>> scores;  // (lambda, mean psnr)
};

// Picks the lambda with the best mean PSNR on `samples`.
LambdaChoice tune_cs_lambda(std::span<const Sample> samples, const std::vector<double>& grid,
                            CsConfig cfg);

}  // namespace mriunroll
