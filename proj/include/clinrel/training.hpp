#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>

namespace clinrel {

/// Patience-based early stopping. Epochs are 1-based. An epoch improves when
/// its metric is strictly better than the best seen so far; training stops
/// once `patience` consecutive epochs fail to improve.
class EarlyStopper {
 public:
  enum class Goal { Maximize, Minimize };

  EarlyStopper(int patience, Goal goal) : patience_(patience), goal_(goal) {}

  /// Records one epoch. Returns true when it is the new best.
  bool update(double metric) {
    ++epoch_;
    const bool better = goal_ == Goal::Maximize ? metric > best_ : metric < best_;
    if (best_epoch_ == 0 || better) {
      best_ = metric;
      best_epoch_ = epoch_;
      return true;
    }
    return false;
  }

  bool should_stop() const noexcept { return best_epoch_ > 0 && epoch_ - best_epoch_ >= patience_; }
  int best_epoch() const noexcept { return best_epoch_; }
  int epochs_seen() const noexcept { return epoch_; }
  double best() const noexcept { return best_; }

 private:
  int patience_;
  Goal goal_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::quiet_NaN();
};

enum class Scheduler { ReduceOnPlateau, CosineAnnealing, OneCycle, Exponential };

std::string_view to_string(Scheduler s) noexcept;
std::optional<Scheduler> parse_scheduler(std::string_view s) noexcept;

/// Linear warmup over the first ceil(warmup_ratio * total_steps) steps, then
/// the selected schedule. Reduce-on-plateau halves the rate whenever the
/// validation loss fails to improve for one epoch.
class LearningRateSchedule {
 public:
  LearningRateSchedule(double base_rate, Scheduler scheduler, std::size_t total_steps, double warmup_ratio);

  /// Rate for 1-based optimizer step `step`.
  double rate(std::size_t step) const;

  /// Called once per epoch with the validation loss.
  void end_epoch(double validation_loss);

  std::size_t warmup_steps() const noexcept { return warmup_steps_; }

 private:
  double base_;
  Scheduler scheduler_;
  std::size_t total_steps_;
  std::size_t warmup_steps_;
  double plateau_scale_ = 1.0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  int epochs_done_ = 0;
};

}  // namespace clinrel
