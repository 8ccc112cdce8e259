#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "desmoke/dcprior.hpp"
#include "desmoke/smokesim.hpp"

namespace desmoke {

struct PairRecord {
  std::string id;
  std::string clear_path;    // relative to the manifest directory
  std::string smoked_path;
  std::string source;        // source frame, relative to the ingest directory
  std::string source_group;  // subdirectory of the ingest dir, "" when flat
  Tier tier = Tier::Low;
  SmokeParams smoke;
  std::string split;         // "train" | "test"
};

struct DatasetManifest {
  std::vector<PairRecord> records;
  int resolution = 256;
  std::uint64_t global_seed = 0;
  std::string tool_version;
  std::filesystem::path base_dir;  // where manifest.jsonl lives

  std::filesystem::path resolve(const std::string& rel) const { return base_dir / rel; }
  std::vector<const PairRecord*> split_records(const std::string& split) const;
};

struct TierMix {
  double low = 1.0 / 3.0;
  double medium = 1.0 / 3.0;
  double high = 1.0 / 3.0;
};

// Builds paired clear/smoked data from a directory of clear frames.
// Subdirectories, when present, are treated as source groups and never split
// across train/test. Fully deterministic in (inputs, seed, counts, mix).
DatasetManifest generate_dataset(const std::filesystem::path& clear_dir,
                                 const std::filesystem::path& out_dir,
                                 int n_train, int n_test, std::uint64_t seed,
                                 const TierMix& tier_mix, int resolution = 256,
                                 bool jitter_light = false);

DatasetManifest load_manifest(const std::filesystem::path& manifest_path);

struct Batch {
  std::vector<ImageStack4> inputs;
  std::vector<ImageRgb> targets;
  std::vector<std::string> ids;
};

// Deterministically shuffled epoch iterator; the final partial batch is
// yielded. prepare_input runs on the smoked image at load time.
class BatchStream {
 public:
  BatchStream(const DatasetManifest& manifest, std::string split, int batch_size,
              std::uint64_t shuffle_seed, DarkChannelParams dcp = {},
              GuidedFilterParams gfp = {});

  std::optional<Batch> next();
  void reset(std::uint64_t shuffle_seed);

  int record_count() const { return static_cast<int>(records_.size()); }
  int batches_per_epoch() const;

 private:
  const DatasetManifest* manifest_;
  std::vector<const PairRecord*> records_;
  int batch_size_;
  DarkChannelParams dcp_;
  GuidedFilterParams gfp_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
};

}  // namespace desmoke
