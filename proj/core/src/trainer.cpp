#include "fnetsum/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace fnetsum {

void TrainingConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
    if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
        throw ConfigError("label_smoothing must lie in [0, 1)");
    }
    if (grad_accumulation < 1) throw ConfigError("grad_accumulation must be at least 1");
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double learning_rate, double beta1,
                             double beta2, double eps)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        if (!p.requires_grad()) {
            throw ConfigError("optimizer given a tensor that does not require grad");
        }
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto values = params_[i].values();
        auto grads = params_[i].grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double g = grads[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            values[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void AdamOptimizer::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

double clip_gradients(const std::vector<Tensor>& params, double max_norm) {
    if (!(max_norm > 0.0)) throw ConfigError("clip_gradients: max_norm must be positive");
    double sq = 0.0;
    for (const Tensor& p : params) {
        for (double g : p.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return 1.0;
    const double scale = max_norm / norm;
    for (const Tensor& p : params) {
        Tensor handle = p;
        for (double& g : handle.grad()) g *= scale;
    }
    return scale;
}

namespace {

double example_loss(const Model& model, const Example& ex, double label_smoothing) {
    const std::vector<TokenId> tgt(ex.abstract.begin() + 1, ex.abstract.end());
    Tensor logits = model.forward_teacher_forced(ex.article, tgt);
    return cross_entropy(logits, tgt, kPadId, label_smoothing).item();
}

}  // namespace

double evaluate_loss(const Model& model, const std::vector<Example>& examples,
                     double label_smoothing) {
    if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (const Example& ex : examples) total += example_loss(model, ex, label_smoothing);
    return total / static_cast<double>(examples.size());
}

std::string format_metrics_csv(const std::vector<EpochMetrics>& history) {
    std::ostringstream out;
    out << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const EpochMetrics& m : history) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", m.epoch, m.train_loss, m.val_loss);
        out << buf;
    }
    return out.str();
}

TrainResult train(Model& model, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainingConfig& config,
                  const TrainerIO& io) {
    config.validate();
    if (train_set.empty()) throw ConfigError("train: empty training set");
    const bool checkpointing = !io.checkpoint_dir.empty();
    if (checkpointing && io.vocab == nullptr) {
        throw ConfigError("train: checkpointing requires a vocabulary");
    }
    if (checkpointing) std::filesystem::create_directories(io.checkpoint_dir);

    // FourierFnet trains on the pre-transformed inputs (Fig 3's apriori
    // corpus transform); the other variants embed on the fly.
    const bool precomputed = model.config().variant == ModelVariant::kFourierFnet;
    FourierPrecompute pre;
    if (precomputed) pre = precompute_fourier_inputs(model, train_set, io.checkpoint_dir);

    std::vector<Tensor> params = model.trainable_parameters();
    AdamOptimizer opt(params, config.learning_rate, config.beta1, config.beta2, config.adam_eps);
    Rng rng(config.seed);

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t pending = 0;  // examples accumulated since the last step

    const std::string best_path =
        checkpointing ? (std::filesystem::path(io.checkpoint_dir) / "best.ckpt").string() : "";
    const std::string last_path =
        checkpointing ? (std::filesystem::path(io.checkpoint_dir) / "last.ckpt").string() : "";

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            const Example& ex = train_set[idx];
            const std::vector<TokenId> tgt(ex.abstract.begin() + 1, ex.abstract.end());
            Tape tape;
            Tensor logits;
            if (precomputed) {
                logits = model.forward_from_inputs(pre.src_inputs[idx], pre.tgt_inputs[idx]);
            } else {
                logits = model.forward_teacher_forced(ex.article, tgt);
            }
            Tensor loss = cross_entropy(logits, tgt, kPadId, config.label_smoothing);
            const double loss_value = loss.item();
            if (!std::isfinite(loss_value)) {
                throw ConvergenceError("training diverged at epoch " + std::to_string(epoch) +
                                       ": loss is not finite");
            }
            epoch_loss += loss_value;
            if (config.grad_accumulation > 1) {
                loss = scale(loss, 1.0 / static_cast<double>(config.grad_accumulation));
            }
            tape.backward(loss);
            if (++pending >= config.grad_accumulation) {
                clip_gradients(params, config.grad_clip_norm);
                if (config.warmup_steps > 0) {
                    const double t = static_cast<double>(opt.step_count() + 1);
                    const double f = std::min(1.0, t / static_cast<double>(config.warmup_steps));
                    opt.set_learning_rate(config.learning_rate * f);
                }
                opt.step();
                opt.zero_grad();
                pending = 0;
            }
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = epoch_loss / static_cast<double>(train_set.size());
        m.val_loss = evaluate_loss(model, val_set, config.label_smoothing);
        result.history.push_back(m);

        const double selection_loss = val_set.empty() ? m.train_loss : m.val_loss;
        if (selection_loss < result.best_val_loss) {
            result.best_val_loss = selection_loss;
            result.best_epoch = epoch;
            if (checkpointing) {
                save_checkpoint(best_path, model, *io.vocab);
                result.best_checkpoint = best_path;
            }
        }
        if (checkpointing && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
            save_checkpoint(last_path, model, *io.vocab);
        }
        if (!io.metrics_path.empty()) {
            std::ofstream out(io.metrics_path, std::ios::trunc);
            if (!out) throw IoError("cannot write metrics file '" + io.metrics_path + "'");
            out << format_metrics_csv(result.history);
        }
    }
    if (checkpointing) save_checkpoint(last_path, model, *io.vocab);
    return result;
}

}  // namespace fnetsum
