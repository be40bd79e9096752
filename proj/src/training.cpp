#include "clinrel/training.hpp"

#include <algorithm>
#include <numbers>

namespace clinrel {

std::string_view to_string(Scheduler s) noexcept {
  switch (s) {
    case Scheduler::ReduceOnPlateau:
      return "reduce_on_plateau";
    case Scheduler::CosineAnnealing:
      return "cosine_annealing";
    case Scheduler::OneCycle:
      return "one_cycle";
    case Scheduler::Exponential:
      return "exponential";
  }
  return "?";
}

std::optional<Scheduler> parse_scheduler(std::string_view s) noexcept {
  for (auto v : {Scheduler::ReduceOnPlateau, Scheduler::CosineAnnealing, Scheduler::OneCycle,
                 Scheduler::Exponential})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

LearningRateSchedule::LearningRateSchedule(double base_rate, Scheduler scheduler, std::size_t total_steps,
                                           double warmup_ratio)
    : base_(base_rate),
      scheduler_(scheduler),
      total_steps_(std::max<std::size_t>(total_steps, 1)),
      warmup_steps_(static_cast<std::size_t>(std::ceil(warmup_ratio * static_cast<double>(total_steps)))) {}

double LearningRateSchedule::rate(std::size_t step) const {
  if (step <= warmup_steps_ && warmup_steps_ > 0)
    return base_ * static_cast<double>(step) / static_cast<double>(warmup_steps_);
  const double span = static_cast<double>(std::max<std::size_t>(total_steps_ - warmup_steps_, 1));
  const double progress = std::clamp(static_cast<double>(step - warmup_steps_) / span, 0.0, 1.0);
  switch (scheduler_) {
    case Scheduler::ReduceOnPlateau:
      return base_ * plateau_scale_;
    case Scheduler::CosineAnnealing:
      return base_ * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    case Scheduler::OneCycle:
      return base_ * std::max(1.0 - progress, 1e-3);
    case Scheduler::Exponential:
      return base_ * std::pow(0.9, epochs_done_);
  }
  return base_;
}

void LearningRateSchedule::end_epoch(double validation_loss) {
  ++epochs_done_;
  if (validation_loss < best_loss_) {
    best_loss_ = validation_loss;
  } else if (scheduler_ == Scheduler::ReduceOnPlateau) {
    plateau_scale_ *= 0.5;
  }
}

}  // namespace clinrel
