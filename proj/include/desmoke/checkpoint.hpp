#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "desmoke/model.hpp"

namespace desmoke {

// Self-describing training snapshot: both model specs, every parameter and
// batch-norm buffer, Adam moments and step counters. All arrays are float32
// little-endian; the byte layout is documented in README.md and is stable.
struct Checkpoint {
  std::string tool_version;
  GeneratorSpec gen_spec;
  DiscriminatorSpec disc_spec;
  long epoch = 0;
  long step = 0;
  long adam_t_g = 0;
  long adam_t_d = 0;
  std::vector<std::pair<std::string, std::vector<float>>> arrays;

  std::vector<float>* find(const std::string& name);
  const std::vector<float>* find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies net state (params + buffers) into / out of a checkpoint.
void store_net_state(Checkpoint& ckpt, Generator<float>& gen, Discriminator<float>& disc);
void load_net_state(const Checkpoint& ckpt, Generator<float>& gen, Discriminator<float>& disc);

// Throws SpecMismatchError unless the checkpoint was produced under specs
// equal to the given ones.
void require_compatible(const Checkpoint& ckpt, const GeneratorSpec& gen,
                        const DiscriminatorSpec& disc);

}  // namespace desmoke
