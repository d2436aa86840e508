// Copyright 2026 The qsimnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qsimnet/errors.hpp"

namespace qsimnet {

/// CDF of the unit-rate exponential distribution.
inline double exp1_cdf(double u) { return 1.0 - std::exp(-u); }

/// One-sample Kolmogorov-Smirnov statistic of `u` against Exp(1):
/// sup over the sample of |empirical CDF - (1 - e^{-u})|.
inline double ks_statistic_exp1(std::vector<double> u) {
  if (u.empty()) throw StatsError("empty sample");
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    const double f = exp1_cdf(u[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

/// Asymptotic p-value of a one-sample KS statistic, using the standard
/// small-sample effective factor sqrt(n) + 0.12 + 0.11/sqrt(n) and the
/// Kolmogorov series Q(t) = 2 sum_j (-1)^{j-1} e^{-2 j^2 t^2}.
inline double ks_p_value(double statistic, size_t n) {
  if (n == 0) throw StatsError("empty sample");
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * statistic;
  if (t <= 0.0) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * std::exp(-2.0 * j * j * t * t);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

constexpr int kPtHistogramBins = 50;
constexpr double kPtHistogramMax = 10.0;

struct PTReport {
  size_t sample_count = 0;
  uint64_t hilbert_dim = 0;  // N = 2^n
  double ks_statistic = 0.0;
  double ks_p_value = 0.0;
  /// 50 bins of u = N*p over [0, 10): (bin lower edge, density). Densities
  /// are normalized over the in-range samples, so they integrate to 1.
  std::vector<std::pair<double, double>> histogram;
  bool pass = false;
};

/// Tests measurement probabilities against the Porter-Thomas law: u = N*p
/// should follow Exp(1) for deep random circuits. Requires at least 100
/// samples; pass means the KS p-value exceeds `threshold`.
inline PTReport porter_thomas_report(const std::vector<double>& probabilities,
                                     uint64_t hilbert_dim,
                                     double threshold = 0.01) {
  if (probabilities.empty()) throw StatsError("no probabilities given");
  if (probabilities.size() < 100) {
    throw StatsError("need at least 100 probabilities, got " +
                     std::to_string(probabilities.size()));
  }
  if (hilbert_dim == 0) throw StatsError("Hilbert dimension must be positive");
  std::vector<double> u;
  u.reserve(probabilities.size());
  for (double p : probabilities) {
    if (p < 0.0 || p > 1.0) {
      throw StatsError("probability outside [0, 1]");
    }
    u.push_back(static_cast<double>(hilbert_dim) * p);
  }

  PTReport report;
  report.sample_count = probabilities.size();
  report.hilbert_dim = hilbert_dim;
  report.ks_statistic = ks_statistic_exp1(u);
  report.ks_p_value = ks_p_value(report.ks_statistic, u.size());
  report.pass = report.ks_p_value > threshold;

  const double width = kPtHistogramMax / kPtHistogramBins;
  std::vector<size_t> counts(kPtHistogramBins, 0);
  size_t in_range = 0;
  for (double v : u) {
    if (v >= 0.0 && v < kPtHistogramMax) {
      ++counts[static_cast<size_t>(v / width)];
      ++in_range;
    }
  }
  report.histogram.reserve(kPtHistogramBins);
  for (int b = 0; b < kPtHistogramBins; ++b) {
    const double density =
        in_range == 0 ? 0.0
                      : static_cast<double>(counts[b]) /
                            (static_cast<double>(in_range) * width);
    report.histogram.emplace_back(b * width, density);
  }
  return report;
}

/// One measured worker sample: `units` subtasks took `seconds` of wall time
/// on that worker.
struct WorkerSample {
  std::string label;
  uint64_t units = 0;
  double seconds = 0.0;
};

/// Predicts the wall time of running `total_units` on `target_workers`
/// equal workers: each sample's measured per-unit time is scaled to the
/// target share total_units / target_workers, and the largest scaled time
/// wins (the slowest sampled worker bounds the cluster).
inline double extrapolate_runtime(const std::vector<WorkerSample>& samples,
                                  uint64_t total_units, int target_workers) {
  if (samples.empty()) throw StatsError("need at least one worker sample");
  if (target_workers <= 0) throw StatsError("target workers must be positive");
  double prediction = 0.0;
  for (const auto& s : samples) {
    if (s.units == 0) throw StatsError("worker sample with zero units");
    const double per_unit = s.seconds / static_cast<double>(s.units);
    const double share = static_cast<double>(total_units) /
                         static_cast<double>(target_workers);
    prediction = std::max(prediction, per_unit * share);
  }
  return prediction;
}

/// One row shaped like the benchmarking tables: circuit label, amplitude
/// count, subtasks per amplitude, worker description, measured and predicted
/// seconds per amplitude.
struct BenchRecord {
  std::string circuit_label;
  uint64_t n_amplitudes = 0;
  uint64_t subtasks_per_amplitude = 0;
  std::string resources;
  double seconds_per_amplitude = 0.0;
  double predicted_seconds_per_amplitude = 0.0;
};

/// Writes bench.csv (the records) and pt_histogram.csv (bin lower edge in
/// u = N*p units, observed density, and the e^{-u} reference curve) under
/// `dir`. Throws IoError when the directory cannot be written.
inline void emit_report(const std::vector<BenchRecord>& records,
                        const PTReport& pt, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create report directory " + dir);
  }
  {
    std::ofstream out(std::filesystem::path(dir) / "bench.csv");
    if (!out) throw IoError("cannot write bench.csv under " + dir);
    out << "circuit,amplitudes,subtasks_per_amplitude,resources,"
           "seconds_per_amplitude,predicted_seconds_per_amplitude\n";
    for (const auto& r : records) {
      out << r.circuit_label << "," << r.n_amplitudes << ","
          << r.subtasks_per_amplitude << "," << r.resources << ","
          << r.seconds_per_amplitude << ","
          << r.predicted_seconds_per_amplitude << "\n";
    }
  }
  {
    std::ofstream out(std::filesystem::path(dir) / "pt_histogram.csv");
    if (!out) throw IoError("cannot write pt_histogram.csv under " + dir);
    out << "bin_lower_u,density,exp_reference\n";
    out.precision(17);
    for (const auto& [lower, density] : pt.histogram) {
      out << lower << "," << density << "," << std::exp(-lower) << "\n";
    }
  }
}

}  // namespace qsimnet
