#include "desmoke/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "desmoke/checkpoint.hpp"
#include "desmoke/dcprior.hpp"
#include "desmoke/image_io.hpp"
#include "desmoke/tensor.hpp"
#include "desmoke/version.hpp"

namespace desmoke {

namespace {

using nlohmann::json;

// JSON has no infinity; the sentinel serializes as the string "inf".
json json_metric(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

std::string csv_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

struct Moments {
  double mean_a = 0, mean_b = 0, var_a = 0, var_b = 0, cov = 0;
};

Moments window_moments(const Plane& a, const Plane& b, int y0, int x0, int h, int w) {
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) {
      const double va = a(y, x), vb = b(y, x);
      sa += va;
      sb += vb;
      saa += va * va;
      sbb += vb * vb;
      sab += va * vb;
    }
  const double n = static_cast<double>(h) * w;
  Moments m;
  m.mean_a = sa / n;
  m.mean_b = sb / n;
  m.var_a = saa / n - m.mean_a * m.mean_a;
  m.var_b = sbb / n - m.mean_b * m.mean_b;
  m.cov = sab / n - m.mean_a * m.mean_b;
  return m;
}

double ssim_from_moments(const Moments& m, const MetricConfig& cfg) {
  const double c1 = cfg.c1_eff(), c2 = cfg.c2_eff();
  return ((2.0 * m.mean_a * m.mean_b + c1) * (2.0 * m.cov + c2)) /
         ((m.mean_a * m.mean_a + m.mean_b * m.mean_b + c1) * (m.var_a + m.var_b + c2));
}

}  // namespace

double mse(const Plane& a, const Plane& b) {
  require_same_shape(a, b, "mse");
  double acc = 0;
  for (int y = 0; y < a.rows(); ++y)
    for (int x = 0; x < a.cols(); ++x) {
      const double d = static_cast<double>(a(y, x)) - static_cast<double>(b(y, x));
      acc += d * d;
    }
  return acc / (static_cast<double>(a.rows()) * a.cols());
}

double mse(const ImageRgb& a, const ImageRgb& b) {
  require_same_shape(a, b, "mse");
  return (mse(a.r, b.r) + mse(a.g, b.g) + mse(a.b, b.b)) / 3.0;
}

double psnr_from_mse(double mse_value, const MetricConfig& cfg) {
  if (mse_value < 0) throw ValueError("psnr: negative mse");
  if (mse_value == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(cfg.max_value * cfg.max_value / mse_value);
}

double psnr(const Plane& a, const Plane& b, const MetricConfig& cfg) {
  return psnr_from_mse(mse(a, b), cfg);
}

double psnr(const ImageRgb& a, const ImageRgb& b, const MetricConfig& cfg) {
  return psnr_from_mse(mse(a, b), cfg);
}

double ssim(const Plane& a, const Plane& b, const MetricConfig& cfg) {
  require_same_shape(a, b, "ssim");
  const int h = static_cast<int>(a.rows()), w = static_cast<int>(a.cols());
  if (cfg.ssim_mode == MetricConfig::SsimMode::Global)
    return ssim_from_moments(window_moments(a, b, 0, 0, h, w), cfg);

  const int win = cfg.ssim_window, stride = cfg.ssim_stride;
  if (win < 2 || stride < 1) throw ValueError("ssim: bad window/stride");
  if (win > h || win > w) throw ValueError("ssim: image smaller than window");
  double acc = 0;
  long count = 0;
  for (int y = 0; y + win <= h; y += stride)
    for (int x = 0; x + win <= w; x += stride, ++count)
      acc += ssim_from_moments(window_moments(a, b, y, x, win, win), cfg);
  return acc / static_cast<double>(count);
}

double ssim(const ImageRgb& a, const ImageRgb& b, const MetricConfig& cfg) {
  return ssim(gray_mean(a), gray_mean(b), cfg);
}

Quartiles quartiles(std::vector<double> values) {
  Quartiles q;
  q.count = static_cast<int>(values.size());
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  q.mean = sum / static_cast<double>(values.size());
  auto at = [&](double p) {  // linear interpolation between order statistics
    const double pos = p * (static_cast<double>(values.size()) - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return values[lo] + t * (values[hi] - values[lo]);
  };
  q.min = values.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = values.back();
  return q;
}

EvalReport evaluate(const DatasetManifest& manifest, const std::filesystem::path& checkpoint,
                    const MetricConfig& cfg, DarkChannelParams dcp, GuidedFilterParams gfp) {
  const auto test_records = manifest.split_records("test");
  if (test_records.empty()) throw ValueError("manifest has no records in split 'test'");

  const Checkpoint ckpt = load_checkpoint(checkpoint);
  Generator<float> gen(ckpt.gen_spec, 0);
  Discriminator<float> disc(ckpt.disc_spec, 0);
  load_net_state(ckpt, gen, disc);

  EvalReport report;
  report.cfg = cfg;
  report.checkpoint = checkpoint.string();

  for (const PairRecord* rec : test_records) {
    ImageRgb clear = load_image(manifest.resolve(rec->clear_path));
    ImageRgb smoked = load_image(manifest.resolve(rec->smoked_path));
    ImageStack4 stack = prepare_input(smoked, dcp, gfp);
    Tensor4<float> x = to_tensor<float>(std::vector<ImageStack4>{stack});
    ImageRgb output = to_images(gen.forward(x, Mode::EvalDeterministic))[0];

    EvalRow row;
    row.id = rec->id;
    row.tier = rec->tier;
    row.psnr_output = psnr(output, clear, cfg);
    row.ssim_output = ssim(output, clear, cfg);
    row.psnr_baseline = psnr(smoked, clear, cfg);
    row.ssim_baseline = ssim(smoked, clear, cfg);
    report.rows.push_back(std::move(row));
  }

  for (Tier tier : {Tier::Low, Tier::Medium, Tier::High}) {
    std::vector<double> po, so, pb, sb;
    for (const EvalRow& r : report.rows) {
      if (r.tier != tier) continue;
      po.push_back(r.psnr_output);
      so.push_back(r.ssim_output);
      pb.push_back(r.psnr_baseline);
      sb.push_back(r.ssim_baseline);
    }
    if (po.empty()) continue;
    TierSummary t;
    t.tier = tier;
    t.psnr_output = quartiles(po);
    t.ssim_output = quartiles(so);
    t.psnr_baseline = quartiles(pb);
    t.ssim_baseline = quartiles(sb);
    t.psnr_gain = t.psnr_output.mean - t.psnr_baseline.mean;
    t.psnr_gain_significant = std::abs(t.psnr_gain) >= 0.5;
    report.tiers.push_back(t);
  }
  return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::ofstream csv(out_dir / "report.csv");
  if (!csv) throw IoError("cannot write report.csv in " + out_dir.string());
  csv << "id,tier,psnr_output,ssim_output,psnr_baseline,ssim_baseline\n";
  for (const EvalRow& r : report.rows)
    csv << r.id << ',' << tier_name(r.tier) << ',' << csv_metric(r.psnr_output) << ','
        << csv_metric(r.ssim_output) << ',' << csv_metric(r.psnr_baseline) << ','
        << csv_metric(r.ssim_baseline) << "\n";

  auto quart_json = [](const Quartiles& q) {
    return json{{"count", q.count},       {"mean", json_metric(q.mean)},
                {"min", json_metric(q.min)}, {"q1", json_metric(q.q1)},
                {"median", json_metric(q.median)}, {"q3", json_metric(q.q3)},
                {"max", json_metric(q.max)}};
  };

  json tiers = json::array();
  for (const TierSummary& t : report.tiers)
    tiers.push_back(json{{"tier", tier_name(t.tier)},
                         {"psnr_output", quart_json(t.psnr_output)},
                         {"ssim_output", quart_json(t.ssim_output)},
                         {"psnr_baseline", quart_json(t.psnr_baseline)},
                         {"ssim_baseline", quart_json(t.ssim_baseline)},
                         {"psnr_gain", json_metric(t.psnr_gain)},
                         {"psnr_gain_significant", t.psnr_gain_significant}});
  json summary{{"tool_version", kToolVersion},
               {"checkpoint", report.checkpoint},
               {"records", report.rows.size()},
               {"max_value", report.cfg.max_value},
               {"ssim_c1", report.cfg.c1_eff()},
               {"ssim_c2", report.cfg.c2_eff()},
               {"tiers", tiers}};
  std::ofstream js(out_dir / "summary.json");
  js << summary.dump(2) << "\n";

  // per-tier five-number summaries, one series per tier/column, for boxplots
  json series = json::array();
  for (const TierSummary& t : report.tiers) {
    auto push = [&](const std::string& what, const Quartiles& q) {
      series.push_back(json{{"label", std::string(tier_name(t.tier)) + "/" + what},
                            {"q", {json_metric(q.min), json_metric(q.q1), json_metric(q.median),
                                   json_metric(q.q3), json_metric(q.max)}}});
    };
    push("psnr_output", t.psnr_output);
    push("psnr_baseline", t.psnr_baseline);
    push("ssim_output", t.ssim_output);
    push("ssim_baseline", t.ssim_baseline);
  }
  std::ofstream bp(out_dir / "boxplot.json");
  bp << json{{"series", series}}.dump(2) << "\n";
}

}  // namespace desmoke
