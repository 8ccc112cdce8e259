#include "desmoke/trainer.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "desmoke/rng.hpp"
#include "desmoke/version.hpp"

namespace desmoke {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kTagInitG = 0xA1;
constexpr std::uint64_t kTagInitD = 0xA2;
constexpr std::uint64_t kTagEpoch = 0xE0;
constexpr std::uint64_t kTagDropout = 0xD0;

Checkpoint snapshot(const TrainConfig& cfg, Generator<float>& gen, Discriminator<float>& disc,
                    Adam<float>& adam_g, Adam<float>& adam_d, long epoch, long step) {
  Checkpoint ckpt;
  ckpt.tool_version = kToolVersion;
  ckpt.gen_spec = cfg.gen;
  ckpt.disc_spec = cfg.disc;
  ckpt.epoch = epoch;
  ckpt.step = step;
  ckpt.adam_t_g = adam_g.t();
  ckpt.adam_t_d = adam_d.t();
  store_net_state(ckpt, gen, disc);
  std::vector<ParamRef<float>> adam_state;
  adam_g.collect_state(adam_state);
  adam_d.collect_state(adam_state);
  for (auto& r : adam_state) ckpt.arrays.emplace_back(r.name, *r.value);
  return ckpt;
}

void restore_adam(const Checkpoint& ckpt, Adam<float>& adam_g, Adam<float>& adam_d) {
  std::vector<ParamRef<float>> adam_state;
  adam_g.collect_state(adam_state);
  adam_d.collect_state(adam_state);
  for (auto& r : adam_state) {
    const std::vector<float>* src = ckpt.find(r.name);
    if (!src) throw FormatError("checkpoint missing optimizer array: " + r.name);
    if (src->size() != r.value->size())
      throw SpecMismatchError("checkpoint optimizer array size mismatch: " + r.name);
    *r.value = *src;
  }
  adam_g.set_t(ckpt.adam_t_g);
  adam_d.set_t(ckpt.adam_t_d);
}

TrainResult run_loop(const DatasetManifest& manifest, const TrainConfig& cfg,
                     const fs::path& out_dir, const Checkpoint* start_from) {
  validate(cfg.gen);
  validate(cfg.disc);
  if (cfg.batch_size < 1) throw ValueError("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.f)) throw ValueError("learning_rate must be > 0");

  const auto train_records = manifest.split_records("train");
  if (train_records.empty()) throw ValueError("manifest has no train records");

  Generator<float> gen(cfg.gen, mix(cfg.seed, kTagInitG));
  Discriminator<float> disc(cfg.disc, mix(cfg.seed, kTagInitD));
  Adam<float> adam_g(gen.params(), cfg.learning_rate, cfg.beta1, cfg.beta2);
  Adam<float> adam_d(disc.params(), cfg.learning_rate, cfg.beta1, cfg.beta2);

  long start_step = 0;
  if (start_from) {
    require_compatible(*start_from, cfg.gen, cfg.disc);
    load_net_state(*start_from, gen, disc);
    restore_adam(*start_from, adam_g, adam_d);
    start_step = start_from->step;
  }

  BatchStream stream(manifest, "train", cfg.batch_size, /*shuffle_seed=*/0, cfg.dcp, cfg.gfp);
  const long steps_per_epoch = stream.batches_per_epoch();
  const long total_steps =
      cfg.max_steps > 0 ? cfg.max_steps : static_cast<long>(cfg.epochs) * steps_per_epoch;
  if (start_step >= total_steps && start_from)
    throw ValueError("checkpoint is already at or past the requested step count");

  fs::create_directories(out_dir);
  std::ofstream log_file(out_dir / "train.log",
                         start_from ? std::ios::app : std::ios::trunc);
  if (!log_file) throw IoError("cannot write train log in " + out_dir.string());
  if (!start_from)
    log_file << json{{"type", "train_log"},
                     {"tool_version", kToolVersion},
                     {"seed", cfg.seed},
                     {"batch_size", cfg.batch_size},
                     {"learning_rate", cfg.learning_rate},
                     {"lambda", cfg.loss.lambda}}
                    .dump()
             << "\n";

  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  long current_epoch = -1;

  for (long step = start_step; step < total_steps; ++step) {
    const long epoch = step / steps_per_epoch;
    const long batch_idx = step % steps_per_epoch;
    if (epoch != current_epoch) {
      stream.reset(mix(cfg.seed, kTagEpoch, static_cast<std::uint64_t>(epoch)));
      current_epoch = epoch;
      for (long skip = 0; skip < batch_idx; ++skip) stream.next();
    }
    auto batch = stream.next();
    if (!batch) throw TrainError("batch stream exhausted early at step " + std::to_string(step));

    Tensor4<float> x = to_tensor<float>(batch->inputs);
    Tensor4<float> target = to_tensor<float>(batch->targets);

    // G forward once; its output serves the D update (as a constant) and the
    // G update (through backprop).
    Tensor4<float> gout =
        gen.forward(x, Mode::Train, mix(cfg.seed, kTagDropout, static_cast<std::uint64_t>(step)));

    // D step
    disc.zero_grad();
    Tensor4<float> real_scores = disc.forward(x, target, Mode::Train);
    const double bce_real = bce_with_logits_mean(real_scores, 1.0);
    disc.backward(bce_with_logits_grad(real_scores, 1.0));
    Tensor4<float> fake_scores = disc.forward(x, gout, Mode::Train);
    const double bce_fake = bce_with_logits_mean(fake_scores, 0.0);
    disc.backward(bce_with_logits_grad(fake_scores, 0.0));
    const double d_loss = bce_real + bce_fake;
    adam_d.step();

    // G step against the updated D
    gen.zero_grad();
    disc.zero_grad();
    Tensor4<float> fake2 = disc.forward(x, gout, Mode::Train);
    const double g_adv = bce_with_logits_mean(fake2, 1.0);
    const double l1 = l1_rgb(gout, target);
    auto [dcond, dcand] = disc.backward(bce_with_logits_grad(fake2, 1.0));
    Tensor4<float> dl1 = l1_rgb_grad(gout, target);
    for (std::size_t i = 0; i < dcand.v.size(); ++i)
      dcand.v[i] += static_cast<float>(cfg.loss.lambda) * dl1.v[i];
    gen.backward(dcand);
    adam_g.step();

    const double total_g = total_generator_loss(g_adv, l1, cfg.loss);
    if (!std::isfinite(d_loss) || !std::isfinite(total_g))
      throw TrainError("non-finite loss at step " + std::to_string(step));

    StepRecord rec;
    rec.step = step;
    rec.epoch = static_cast<int>(epoch);
    rec.d_loss = d_loss;
    rec.g_adv = g_adv;
    rec.l1 = l1;
    rec.total_g = total_g;
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);

    log_file << json{{"step", rec.step},     {"epoch", rec.epoch}, {"d_loss", rec.d_loss},
                     {"g_adv", rec.g_adv},   {"l1", rec.l1},       {"total_g", rec.total_g},
                     {"wall_time", rec.wall_time}}
                    .dump()
             << "\n";

    if (!cfg.quiet && cfg.log_every > 0 && (step + 1) % cfg.log_every == 0)
      std::printf("step %ld/%ld epoch %ld  d_loss=%.4f g_adv=%.4f l1=%.4f total_g=%.4f\n",
                  step + 1, total_steps, epoch, d_loss, g_adv, l1, total_g);

    const bool epoch_done = batch_idx == steps_per_epoch - 1;
    if (cfg.checkpoint_every > 0 && epoch_done && (epoch + 1) % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint-epoch%04ld.dsmk", epoch + 1);
      save_checkpoint(snapshot(cfg, gen, disc, adam_g, adam_d, epoch + 1, step + 1),
                      out_dir / name);
    }
  }

  result.final_checkpoint = out_dir / "checkpoint-final.dsmk";
  save_checkpoint(snapshot(cfg, gen, disc, adam_g, adam_d,
                           (total_steps + steps_per_epoch - 1) / steps_per_epoch, total_steps),
                  result.final_checkpoint);
  return result;
}

}  // namespace

TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const fs::path& out_dir) {
  return run_loop(manifest, cfg, out_dir, nullptr);
}

TrainResult resume(const fs::path& checkpoint_path, const DatasetManifest& manifest,
                   const TrainConfig& cfg, const fs::path& out_dir) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  return run_loop(manifest, cfg, out_dir, &ckpt);
}

}  // namespace desmoke
