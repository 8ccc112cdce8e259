#include "desmoke/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace desmoke {

namespace {

using nlohmann::json;

constexpr char kMagic[10] = {'D', 'S', 'M', 'K', 'C', 'K', 'P', 'T', '1', '\n'};

json spec_to_json(const GeneratorSpec& s) {
  return json{{"resolution", s.resolution},       {"input_channels", s.input_channels},
              {"output_channels", s.output_channels}, {"base_width", s.base_width},
              {"width_scale", s.width_scale},     {"depth", s.depth},
              {"dropout_rate", s.dropout_rate}};
}

json spec_to_json(const DiscriminatorSpec& s) {
  return json{{"resolution", s.resolution},
              {"input_channels", s.input_channels},
              {"base_width", s.base_width},
              {"width_scale", s.width_scale},
              {"n_down", s.n_down}};
}

GeneratorSpec gen_spec_from_json(const json& j) {
  GeneratorSpec s;
  s.resolution = j.at("resolution").get<int>();
  s.input_channels = j.at("input_channels").get<int>();
  s.output_channels = j.at("output_channels").get<int>();
  s.base_width = j.at("base_width").get<int>();
  s.width_scale = j.at("width_scale").get<double>();
  s.depth = j.at("depth").get<int>();
  s.dropout_rate = j.at("dropout_rate").get<float>();
  return s;
}

DiscriminatorSpec disc_spec_from_json(const json& j) {
  DiscriminatorSpec s;
  s.resolution = j.at("resolution").get<int>();
  s.input_channels = j.at("input_channels").get<int>();
  s.base_width = j.at("base_width").get<int>();
  s.width_scale = j.at("width_scale").get<double>();
  s.n_down = j.at("n_down").get<int>();
  return s;
}

}  // namespace

std::vector<float>* Checkpoint::find(const std::string& name) {
  for (auto& [n, v] : arrays)
    if (n == name) return &v;
  return nullptr;
}

const std::vector<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return &v;
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json header{{"tool_version", ckpt.tool_version},
              {"generator", spec_to_json(ckpt.gen_spec)},
              {"discriminator", spec_to_json(ckpt.disc_spec)},
              {"epoch", ckpt.epoch},
              {"step", ckpt.step},
              {"adam_t_g", ckpt.adam_t_g},
              {"adam_t_d", ckpt.adam_t_d}};
  json arrays = json::array();
  for (const auto& [name, v] : ckpt.arrays)
    arrays.push_back(json{{"name", name}, {"count", v.size()}});
  header["arrays"] = std::move(arrays);

  const std::string hs = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = hs.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, v] : ckpt.arrays)
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing checkpoint: " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a checkpoint file: " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1ull << 30)) throw FormatError("corrupt checkpoint header: " + path.string());
  std::string hs(len, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("corrupt checkpoint header: " + path.string());

  Checkpoint ckpt;
  try {
    const json header = json::parse(hs);
    ckpt.tool_version = header.at("tool_version").get<std::string>();
    ckpt.gen_spec = gen_spec_from_json(header.at("generator"));
    ckpt.disc_spec = disc_spec_from_json(header.at("discriminator"));
    ckpt.epoch = header.at("epoch").get<long>();
    ckpt.step = header.at("step").get<long>();
    ckpt.adam_t_g = header.at("adam_t_g").get<long>();
    ckpt.adam_t_d = header.at("adam_t_d").get<long>();
    for (const auto& a : header.at("arrays")) {
      std::vector<float> v(a.at("count").get<std::size_t>());
      in.read(reinterpret_cast<char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
      if (!in) throw FormatError("checkpoint data truncated: " + path.string());
      ckpt.arrays.emplace_back(a.at("name").get<std::string>(), std::move(v));
    }
  } catch (const json::exception& e) {
    throw FormatError("corrupt checkpoint header: " + std::string(e.what()));
  }
  return ckpt;
}

void store_net_state(Checkpoint& ckpt, Generator<float>& gen, Discriminator<float>& disc) {
  for (auto& p : gen.params()) ckpt.arrays.emplace_back(p.name, *p.value);
  for (auto& b : gen.buffers()) ckpt.arrays.emplace_back(b.name, *b.value);
  for (auto& p : disc.params()) ckpt.arrays.emplace_back(p.name, *p.value);
  for (auto& b : disc.buffers()) ckpt.arrays.emplace_back(b.name, *b.value);
}

void load_net_state(const Checkpoint& ckpt, Generator<float>& gen, Discriminator<float>& disc) {
  auto restore = [&](auto refs) {
    for (auto& r : refs) {
      const std::vector<float>* src = ckpt.find(r.name);
      if (!src) throw FormatError("checkpoint missing array: " + r.name);
      if (src->size() != r.value->size())
        throw SpecMismatchError("checkpoint array size mismatch: " + r.name);
      *r.value = *src;
    }
  };
  restore(gen.params());
  restore(gen.buffers());
  restore(disc.params());
  restore(disc.buffers());
}

void require_compatible(const Checkpoint& ckpt, const GeneratorSpec& gen,
                        const DiscriminatorSpec& disc) {
  const GeneratorSpec& g = ckpt.gen_spec;
  if (g.resolution != gen.resolution || g.input_channels != gen.input_channels ||
      g.output_channels != gen.output_channels || g.base_width != gen.base_width ||
      g.width_scale != gen.width_scale || generator_depth(g) != generator_depth(gen))
    throw SpecMismatchError("checkpoint generator spec does not match configuration");
  const DiscriminatorSpec& d = ckpt.disc_spec;
  if (d.resolution != disc.resolution || d.input_channels != disc.input_channels ||
      d.base_width != disc.base_width || d.width_scale != disc.width_scale ||
      d.n_down != disc.n_down)
    throw SpecMismatchError("checkpoint discriminator spec does not match configuration");
}

}  // namespace desmoke
