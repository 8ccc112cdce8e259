#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "desmoke/checkpoint.hpp"
#include "desmoke/dataset.hpp"
#include "desmoke/loss.hpp"
#include "desmoke/model.hpp"

namespace desmoke {

// Adam with the conventional bias correction; one instance per network.
template <class T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>> params, T lr, T beta1, T beta2, T eps = T(1e-8))
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& p : params_) {
      m_.emplace_back(p.value->size(), T(0));
      v_.emplace_back(p.value->size(), T(0));
    }
  }

  void step() {
    ++t_;
    const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      std::vector<T>& val = *params_[i].value;
      const std::vector<T>& grad = *params_[i].grad;
      std::vector<T>& m = m_[i];
      std::vector<T>& v = v_[i];
      for (std::size_t j = 0; j < val.size(); ++j) {
        m[j] = beta1_ * m[j] + (T(1) - beta1_) * grad[j];
        v[j] = beta2_ * v[j] + (T(1) - beta2_) * grad[j] * grad[j];
        const T mhat = m[j] / bc1;
        const T vhat = v[j] / bc2;
        val[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  long t() const { return t_; }
  void set_t(long t) { t_ = t; }

  // Moment arrays surface as "adam.<param>.m" / ".v" for checkpointing.
  void collect_state(std::vector<ParamRef<T>>& out) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.push_back({"adam." + params_[i].name + ".m", &m_[i], nullptr});
      out.push_back({"adam." + params_[i].name + ".v", &v_[i], nullptr});
    }
  }

 private:
  std::vector<ParamRef<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  T lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

struct TrainConfig {
  int batch_size = 16;
  float learning_rate = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  int epochs = 50;
  long max_steps = 0;        // 0 = run epochs to completion
  int checkpoint_every = 0;  // in epochs; 0 = final checkpoint only
  std::uint64_t seed = 0;
  LossConfig loss;
  GeneratorSpec gen;
  DiscriminatorSpec disc;
  DarkChannelParams dcp;
  GuidedFilterParams gfp;
  int log_every = 10;
  bool quiet = false;
};

struct StepRecord {
  long step = 0;
  int epoch = 0;
  double d_loss = 0, g_adv = 0, l1 = 0, total_g = 0;
  double wall_time = 0;  // seconds since training started
};

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::vector<StepRecord> log;
};

// Alternating D/G optimization; writes train.log (line-delimited JSON) and
// checkpoints under out_dir. Fully reproducible from (manifest, cfg, seed).
TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir);

// Continues from a checkpoint as if training had never stopped.
TrainResult resume(const std::filesystem::path& checkpoint_path,
                   const DatasetManifest& manifest, const TrainConfig& cfg,
                   const std::filesystem::path& out_dir);

}  // namespace desmoke
