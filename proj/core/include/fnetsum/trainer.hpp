#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fnetsum/checkpoint.hpp"
#include "fnetsum/data.hpp"
#include "fnetsum/model.hpp"

namespace fnetsum {

struct TrainingConfig {
    double learning_rate = 1e-4;
    std::size_t epochs = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip_norm = 1.0;
    double label_smoothing = 0.0;
    std::uint64_t seed = 42;
    std::size_t checkpoint_every = 0;  // epochs between last.ckpt writes; 0 = end only
    std::size_t grad_accumulation = 1;
    std::size_t warmup_steps = 0;  // 0 = constant learning rate

    void validate() const;
};

class AdamOptimizer {
  public:
    AdamOptimizer(std::vector<Tensor> params, double learning_rate, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    void step();  // consumes the gradients currently in the parameters
    void zero_grad();
    void set_learning_rate(double learning_rate) { lr_ = learning_rate; }
    double learning_rate() const { return lr_; }
    std::size_t step_count() const { return t_; }

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the scale factor applied (1.0 when already within bounds).
double clip_gradients(const std::vector<Tensor>& params, double max_norm);

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;  // NaN when no validation set
};

/// Where training artifacts land. Empty paths disable the corresponding
/// output; vocab is only needed when checkpoints are written.
struct TrainerIO {
    std::string metrics_path;
    std::string checkpoint_dir;
    const Vocabulary* vocab = nullptr;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;
    std::string best_checkpoint;  // empty when checkpointing disabled
};

/// Teacher-forced training, batch size 1, examples shuffled per epoch from a
/// single seeded generator. A non-finite loss aborts with ConvergenceError
/// naming the epoch. The checkpoint with the best validation loss (train
/// loss when no validation set) is kept as best.ckpt.
TrainResult train(Model& model, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainingConfig& config,
                  const TrainerIO& io = {});

/// Mean teacher-forced loss over a set, without recording gradients.
double evaluate_loss(const Model& model, const std::vector<Example>& examples,
                     double label_smoothing = 0.0);

std::string format_metrics_csv(const std::vector<EpochMetrics>& history);

}  // namespace fnetsum
