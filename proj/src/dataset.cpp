#include "desmoke/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "desmoke/image_io.hpp"
#include "desmoke/rng.hpp"
#include "desmoke/version.hpp"

namespace desmoke {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<const PairRecord*> DatasetManifest::split_records(const std::string& split) const {
  std::vector<const PairRecord*> out;
  for (const PairRecord& r : records)
    if (r.split == split) out.push_back(&r);
  return out;
}

namespace {

struct SourceFrame {
  std::string group;  // "" when the ingest dir is flat
  std::string rel;    // path relative to the ingest dir
};

std::vector<SourceFrame> list_sources(const fs::path& clear_dir) {
  if (!fs::is_directory(clear_dir))
    throw IoError("clear directory does not exist: " + clear_dir.string());
  std::vector<SourceFrame> flat;
  std::vector<std::string> groups;
  for (const auto& entry : fs::directory_iterator(clear_dir)) {
    if (entry.is_directory()) {
      groups.push_back(entry.path().filename().string());
    } else if (entry.path().extension() == ".png") {
      flat.push_back({"", entry.path().filename().string()});
    }
  }
  std::sort(groups.begin(), groups.end());
  std::sort(flat.begin(), flat.end(), [](const auto& a, const auto& b) { return a.rel < b.rel; });
  for (const std::string& g : groups) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(clear_dir / g))
      if (entry.path().extension() == ".png") files.push_back(entry.path().filename().string());
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) flat.push_back({g, g + "/" + f});
  }
  return flat;
}

// Split counts by largest remainder so they always sum to n.
std::array<int, 3> tier_counts(const TierMix& mix, int n) {
  const double sum = mix.low + mix.medium + mix.high;
  if (std::abs(sum - 1.0) > 1e-6) throw ValueError("tier mix proportions must sum to 1");
  const double exact[3] = {mix.low * n, mix.medium * n, mix.high * n};
  std::array<int, 3> counts{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    counts[i] = static_cast<int>(std::floor(exact[i]));
    assigned += counts[i];
  }
  std::array<std::pair<double, int>, 3> rem{{{exact[0] - counts[0], 0},
                                            {exact[1] - counts[1], 1},
                                            {exact[2] - counts[2], 2}}};
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (int i = 0; assigned < n; ++i, ++assigned) ++counts[rem[i % 3].second];
  return counts;
}

// Matches what save_image followed by load_image produces.
float quantize_unit(float v) {
  if (v < 0.f) v = 0.f;
  if (v > 1.f) v = 1.f;
  return static_cast<float>(std::lround(static_cast<double>(v) * 255.0)) / 255.f;
}

ImageRgb quantize(const ImageRgb& img) {
  ImageRgb out = img;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        out.channel(c)(y, x) = quantize_unit(out.channel(c)(y, x));
  return out;
}

json smoke_to_json(const SmokeParams& p) {
  return json{{"intensity", p.intensity},
              {"light", {p.atmospheric_light[0], p.atmospheric_light[1], p.atmospheric_light[2]}},
              {"seed", p.seed},
              {"octaves", p.octaves},
              {"persistence", p.persistence},
              {"base_frequency", p.base_frequency}};
}

SmokeParams smoke_from_json(const json& j) {
  SmokeParams p;
  p.intensity = j.at("intensity").get<float>();
  const auto& light = j.at("light");
  p.atmospheric_light = {light.at(0).get<float>(), light.at(1).get<float>(),
                         light.at(2).get<float>()};
  p.seed = j.at("seed").get<std::uint64_t>();
  p.octaves = j.at("octaves").get<int>();
  p.persistence = j.at("persistence").get<float>();
  p.base_frequency = j.at("base_frequency").get<float>();
  return p;
}

}  // namespace

DatasetManifest generate_dataset(const fs::path& clear_dir, const fs::path& out_dir,
                                 int n_train, int n_test, std::uint64_t seed,
                                 const TierMix& tier_mix, int resolution, bool jitter_light) {
  if (n_train < 0 || n_test < 0 || n_train + n_test < 1)
    throw ValueError("generate_dataset: need at least one record");
  if (resolution < 8) throw ValueError("generate_dataset: resolution too small");

  std::vector<SourceFrame> sources = list_sources(clear_dir);
  if (static_cast<int>(sources.size()) < n_train + n_test)
    throw ValueError("insufficient source images: have " + std::to_string(sources.size()) +
                     ", need " + std::to_string(n_train + n_test));

  // Partition sources disjointly; whole groups go to one split when the
  // ingest directory is grouped.
  std::vector<SourceFrame> test_pool, train_pool;
  const bool grouped = std::any_of(sources.begin(), sources.end(),
                                   [](const SourceFrame& s) { return !s.group.empty(); });
  Rng split_rng(mix(seed, 0x51u));
  if (grouped) {
    std::vector<std::string> groups;
    for (const SourceFrame& s : sources)
      if (groups.empty() || groups.back() != s.group) groups.push_back(s.group);
    shuffle(groups, split_rng);
    std::set<std::string> test_groups;
    int covered = 0;
    for (const std::string& g : groups) {
      if (covered >= n_test) break;
      test_groups.insert(g);
      covered += static_cast<int>(std::count_if(sources.begin(), sources.end(),
                                                [&](const SourceFrame& s) { return s.group == g; }));
    }
    for (const SourceFrame& s : sources)
      (test_groups.count(s.group) ? test_pool : train_pool).push_back(s);
    if (static_cast<int>(train_pool.size()) < n_train ||
        static_cast<int>(test_pool.size()) < n_test)
      throw ValueError("group boundaries make the requested split sizes infeasible");
  } else {
    shuffle(sources, split_rng);
    test_pool.assign(sources.begin(), sources.begin() + n_test);
    train_pool.assign(sources.begin() + n_test, sources.begin() + n_test + n_train);
  }
  test_pool.resize(n_test);
  train_pool.resize(n_train);

  fs::create_directories(out_dir / "clear");
  fs::create_directories(out_dir / "smoked");

  DatasetManifest manifest;
  manifest.resolution = resolution;
  manifest.global_seed = seed;
  manifest.tool_version = kToolVersion;
  manifest.base_dir = out_dir;

  long global_index = 0;
  auto emit = [&](const std::vector<SourceFrame>& pool, const std::string& split) {
    const std::array<int, 3> counts = tier_counts(tier_mix, static_cast<int>(pool.size()));
    int tier_cursor = 0, tier_left = counts[0];
    Tier tier = Tier::Low;
    for (std::size_t i = 0; i < pool.size(); ++i, ++global_index) {
      while (tier_left == 0 && tier_cursor < 2) {
        ++tier_cursor;
        tier_left = counts[tier_cursor];
        tier = tier_cursor == 1 ? Tier::Medium : Tier::High;
      }
      --tier_left;

      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%s_%05zu", split.c_str(), i);
      PairRecord rec;
      rec.id = idbuf;
      rec.source = pool[i].rel;
      rec.source_group = pool[i].group;
      rec.split = split;
      rec.tier = tier;
      rec.clear_path = "clear/" + rec.id + ".png";
      rec.smoked_path = "smoked/" + rec.id + ".png";

      ImageRgb clear = quantize(resize_to(load_image(clear_dir / pool[i].rel),
                                          resolution, resolution));
      SmokePair pair = smoke_pair(clear, tier,
                                  mix(seed, 0xD5u, static_cast<std::uint64_t>(global_index)),
                                  jitter_light);
      rec.smoke = pair.params;
      save_image(clear, out_dir / rec.clear_path);
      save_image(pair.smoked, out_dir / rec.smoked_path);
      manifest.records.push_back(std::move(rec));
    }
  };
  emit(train_pool, "train");
  emit(test_pool, "test");

  std::ofstream out(out_dir / "manifest.jsonl");
  if (!out) throw IoError("cannot write manifest: " + (out_dir / "manifest.jsonl").string());
  out << json{{"type", "dataset"},
              {"resolution", manifest.resolution},
              {"global_seed", manifest.global_seed},
              {"tool_version", manifest.tool_version}}
             .dump()
      << "\n";
  for (const PairRecord& r : manifest.records)
    out << json{{"id", r.id},
                {"clear", r.clear_path},
                {"smoked", r.smoked_path},
                {"source", r.source},
                {"source_group", r.source_group},
                {"tier", tier_name(r.tier)},
                {"split", r.split},
                {"smoke", smoke_to_json(r.smoke)}}
               .dump()
        << "\n";
  return manifest;
}

DatasetManifest load_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("missing manifest: " + manifest_path.string());

  DatasetManifest manifest;
  manifest.base_dir = manifest_path.parent_path();

  std::string line;
  long line_no = 0;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (line_no == 1) {
        if (j.value("type", "") != "dataset")
          throw ParseError("manifest header missing type=dataset");
        manifest.resolution = j.at("resolution").get<int>();
        manifest.global_seed = j.at("global_seed").get<std::uint64_t>();
        manifest.tool_version = j.value("tool_version", "");
        continue;
      }
      PairRecord rec;
      rec.id = j.at("id").get<std::string>();
      rec.clear_path = j.at("clear").get<std::string>();
      rec.smoked_path = j.at("smoked").get<std::string>();
      rec.source = j.value("source", "");
      rec.source_group = j.value("source_group", "");
      rec.tier = tier_from_name(j.at("tier").get<std::string>());
      rec.split = j.at("split").get<std::string>();
      rec.smoke = smoke_from_json(j.at("smoke"));
      if (rec.split != "train" && rec.split != "test")
        throw ParseError("record " + rec.id + ": unknown split " + rec.split);
      if (!seen_ids.insert(rec.id).second)
        throw ParseError("duplicate record id: " + rec.id);
      manifest.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (line_no == 0) throw ParseError("manifest is empty: " + manifest_path.string());

  for (const PairRecord& r : manifest.records) {
    if (!fs::exists(manifest.resolve(r.clear_path)))
      throw IoError("record " + r.id + ": missing clear file " + r.clear_path);
    if (!fs::exists(manifest.resolve(r.smoked_path)))
      throw IoError("record " + r.id + ": missing smoked file " + r.smoked_path);
  }
  return manifest;
}

BatchStream::BatchStream(const DatasetManifest& manifest, std::string split, int batch_size,
                         std::uint64_t shuffle_seed, DarkChannelParams dcp,
                         GuidedFilterParams gfp)
    : manifest_(&manifest),
      records_(manifest.split_records(split)),
      batch_size_(batch_size),
      dcp_(dcp),
      gfp_(gfp) {
  if (batch_size < 1) throw ValueError("batch_size must be >= 1");
  reset(shuffle_seed);
}

void BatchStream::reset(std::uint64_t shuffle_seed) {
  order_.resize(records_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  Rng rng(shuffle_seed);
  shuffle(order_, rng);
  cursor_ = 0;
}

int BatchStream::batches_per_epoch() const {
  return static_cast<int>((records_.size() + batch_size_ - 1) / batch_size_);
}

std::optional<Batch> BatchStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  Batch batch;
  while (cursor_ < order_.size() && static_cast<int>(batch.ids.size()) < batch_size_) {
    const PairRecord& rec = *records_[order_[cursor_++]];
    ImageRgb smoked = load_image(manifest_->resolve(rec.smoked_path));
    ImageRgb clear = load_image(manifest_->resolve(rec.clear_path));
    batch.inputs.push_back(prepare_input(smoked, dcp_, gfp_));
    batch.targets.push_back(std::move(clear));
    batch.ids.push_back(rec.id);
  }
  return batch;
}

}  // namespace desmoke
