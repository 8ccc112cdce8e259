#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "desmoke/dataset.hpp"
#include "desmoke/image.hpp"

namespace desmoke {

struct MetricConfig {
  double max_value = 1.0;  // MAX in the PSNR formula; 2^B-1 for B-bit data
  // SSIM stabilizers; <= 0 means the conventional (0.01*MAX)^2 / (0.03*MAX)^2.
  double c1 = 0.0;
  double c2 = 0.0;
  enum class SsimMode { Global, Windowed };
  SsimMode ssim_mode = SsimMode::Global;
  int ssim_window = 8;
  int ssim_stride = 4;

  double c1_eff() const { return c1 > 0 ? c1 : (0.01 * max_value) * (0.01 * max_value); }
  double c2_eff() const { return c2 > 0 ? c2 : (0.03 * max_value) * (0.03 * max_value); }
};

// Mean squared error, 64-bit accumulation; RGB averages the three channels.
double mse(const Plane& a, const Plane& b);
double mse(const ImageRgb& a, const ImageRgb& b);

// 10*log10(MAX^2/MSE); +infinity when MSE == 0.
double psnr_from_mse(double mse_value, const MetricConfig& cfg = {});
double psnr(const Plane& a, const Plane& b, const MetricConfig& cfg = {});
double psnr(const ImageRgb& a, const ImageRgb& b, const MetricConfig& cfg = {});

// Structural similarity; RGB images are compared on their grayscale mean.
// Global mode uses whole-image moments, windowed mode averages sliding windows.
double ssim(const Plane& a, const Plane& b, const MetricConfig& cfg = {});
double ssim(const ImageRgb& a, const ImageRgb& b, const MetricConfig& cfg = {});

struct EvalRow {
  std::string id;
  Tier tier = Tier::Low;
  double psnr_output = 0, ssim_output = 0;
  double psnr_baseline = 0, ssim_baseline = 0;  // raw smoked input vs clear
};

struct Quartiles {
  int count = 0;
  double mean = 0, min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

Quartiles quartiles(std::vector<double> values);

struct TierSummary {
  Tier tier = Tier::Low;
  Quartiles psnr_output, ssim_output, psnr_baseline, ssim_baseline;
  double psnr_gain = 0;             // mean output PSNR minus mean baseline PSNR
  bool psnr_gain_significant = false;  // |gain| >= 0.5 dB
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<TierSummary> tiers;  // only tiers present in the test split
  MetricConfig cfg;
  std::string checkpoint;
};

// Runs the full inference pipeline over the manifest's test split and scores
// outputs and the no-op baseline against the clear ground truth.
EvalReport evaluate(const DatasetManifest& manifest, const std::filesystem::path& checkpoint,
                    const MetricConfig& cfg = {}, DarkChannelParams dcp = {},
                    GuidedFilterParams gfp = {});

// report.csv (per record), summary.json, boxplot.json (per-tier quartiles).
void write_report(const EvalReport& report, const std::filesystem::path& out_dir);

}  // namespace desmoke
