#pragma once

// Two-stage learning-rate schedule and the advisory stage-two heuristic.
//
// Stage one: flat warmup_lr for the first warmup_frac of the steps, a linear
// ramp to max_lr until ramp_end_frac, then cosine decay to floor_lr.
// Stage two restarts from the best checkpoint with a single cosine decay,
// either from max_lr (plateau) or from half the checkpoint's learning rate
// (fluctuating).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sqlgrade {

enum class ScheduleStage { kOne, kTwoPlateau, kTwoFluctuating };

std::string_view to_string(ScheduleStage s);
/// Accepts "one", "two-plateau", "two-fluctuating". Throws std::invalid_argument.
ScheduleStage parse_schedule_stage(std::string_view s);

struct ScheduleSpec {
  std::int64_t total_steps = 1000;
  double warmup_lr = 1e-7;
  double max_lr = 1e-5;
  double warmup_frac = 0.03;
  double ramp_end_frac = 0.10;
  std::optional<double> floor_lr;  // defaults to warmup_lr
  ScheduleStage stage = ScheduleStage::kOne;
  /// Learning rate at the best stage-one checkpoint; required for
  /// kTwoFluctuating.
  std::optional<double> stage2_start_lr_basis;

  double floor() const { return floor_lr.value_or(warmup_lr); }

  /// Throws std::invalid_argument when the fields violate
  /// 0 < warmup_frac < ramp_end_frac < 1, floor <= warmup_lr <= max_lr,
  /// total_steps >= 1, or when the fluctuating basis is missing.
  void validate() const;
};

/// Learning rate at an integer step in [0, total_steps). Throws
/// std::out_of_range otherwise.
double lr_at(std::int64_t step, const ScheduleSpec& spec);

/// The same piecewise curve evaluated at a real position in [0, total_steps].
double lr_at_position(double position, const ScheduleSpec& spec);

/// Starting basis for a fluctuating stage two: the stage-one learning rate
/// at the best checkpoint step.
double checkpoint_lr(std::int64_t best_step, const ScheduleSpec& stage_one);

/// "step,lr" header plus one line per step; lr in shortest round-trip form.
std::string schedule_csv(const ScheduleSpec& spec);

enum class Stage2Mode { kPlateau, kFluctuating };

std::string_view to_string(Stage2Mode m);

struct Stage2Thresholds {
  double min_slope = 1e-3;      // first-half slope must exceed this
  double min_r2 = 0.5;          // and its linear fit must explain the trend
  double plateau_fraction = 0.25;  // last-quartile slope below this share
};

struct Stage2Report {
  Stage2Mode mode = Stage2Mode::kFluctuating;
  double first_half_slope = 0.0;
  double first_half_r2 = 0.0;
  double last_quartile_slope = 0.0;
  Stage2Thresholds thresholds;
};

/// Slopes are ordinary least squares against the point index. The first
/// half is the leading floor(n/2) points, the last quartile the trailing
/// max(2, floor(n/4)) points. Throws std::invalid_argument when fewer than
/// four points are given or a value is not finite.
Stage2Report stage2_mode(const std::vector<double>& accuracy_curve, const Stage2Thresholds& thresholds = {});

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;  // 1 for a constant series
};

/// Least-squares fit of ys against x = 0, 1, 2, ...; at least two points.
LinearFit fit_line(const std::vector<double>& ys);

}  // namespace sqlgrade
