#include "sqlgrade/schedule.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sqlgrade {

std::string_view to_string(ScheduleStage s) {
  switch (s) {
    case ScheduleStage::kOne:
      return "one";
    case ScheduleStage::kTwoPlateau:
      return "two-plateau";
    case ScheduleStage::kTwoFluctuating:
      return "two-fluctuating";
  }
  return "one";
}

ScheduleStage parse_schedule_stage(std::string_view s) {
  if (s == "one") return ScheduleStage::kOne;
  if (s == "two-plateau") return ScheduleStage::kTwoPlateau;
  if (s == "two-fluctuating") return ScheduleStage::kTwoFluctuating;
  throw std::invalid_argument("unknown schedule stage '" + std::string(s) + "'");
}

std::string_view to_string(Stage2Mode m) { return m == Stage2Mode::kPlateau ? "plateau" : "fluctuating"; }

void ScheduleSpec::validate() const {
  if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  if (!(warmup_frac > 0 && warmup_frac < ramp_end_frac && ramp_end_frac < 1)) {
    throw std::invalid_argument("need 0 < warmup_frac < ramp_end_frac < 1");
  }
  const double f = floor();
  if (!(std::isfinite(f) && std::isfinite(warmup_lr) && std::isfinite(max_lr) && f >= 0)) {
    throw std::invalid_argument("learning rates must be finite and non-negative");
  }
  if (!(f <= warmup_lr && warmup_lr <= max_lr)) throw std::invalid_argument("need floor_lr <= warmup_lr <= max_lr");
  if (stage == ScheduleStage::kTwoFluctuating) {
    if (!stage2_start_lr_basis || !(*stage2_start_lr_basis > 0) || !std::isfinite(*stage2_start_lr_basis)) {
      throw std::invalid_argument("two-fluctuating stage needs a positive stage2_start_lr_basis");
    }
  }
}

namespace {

// Half-cosine from `from` at progress 0 down to `to` at progress 1.
double cosine(double from, double to, double progress) {
  return to + (from - to) * (1.0 + std::cos(std::numbers::pi * progress)) / 2.0;
}

}  // namespace

double lr_at_position(double x, const ScheduleSpec& spec) {
  spec.validate();
  const double total = static_cast<double>(spec.total_steps);
  if (!(x >= 0 && x <= total)) throw std::out_of_range("schedule position out of range");
  const double floor = spec.floor();
  switch (spec.stage) {
    case ScheduleStage::kOne: {
      const double warm_end = spec.warmup_frac * total;
      const double ramp_end = spec.ramp_end_frac * total;
      if (x < warm_end) return spec.warmup_lr;
      if (x < ramp_end) return spec.warmup_lr + (spec.max_lr - spec.warmup_lr) * (x - warm_end) / (ramp_end - warm_end);
      return cosine(spec.max_lr, floor, (x - ramp_end) / (total - ramp_end));
    }
    case ScheduleStage::kTwoPlateau:
      return cosine(spec.max_lr, floor, x / total);
    case ScheduleStage::kTwoFluctuating: {
      const double start = *spec.stage2_start_lr_basis / 2.0;
      return cosine(start, std::min(floor, start), x / total);
    }
  }
  return floor;
}

double lr_at(std::int64_t step, const ScheduleSpec& spec) {
  if (step < 0 || step >= spec.total_steps) {
    throw std::out_of_range("step " + std::to_string(step) + " outside [0, " + std::to_string(spec.total_steps) + ")");
  }
  return lr_at_position(static_cast<double>(step), spec);
}

double checkpoint_lr(std::int64_t best_step, const ScheduleSpec& stage_one) {
  ScheduleSpec s = stage_one;
  s.stage = ScheduleStage::kOne;
  return lr_at(best_step, s);
}

std::string schedule_csv(const ScheduleSpec& spec) {
  spec.validate();
  std::string out = "step,lr\n";
  char buf[64];
  for (std::int64_t step = 0; step < spec.total_steps; ++step) {
    const auto res = std::to_chars(buf, buf + sizeof buf, lr_at_position(static_cast<double>(step), spec));
    out += std::to_string(step);
    out += ',';
    out.append(buf, res.ptr);
    out += '\n';
  }
  return out;
}

LinearFit fit_line(const std::vector<double>& ys) {
  if (ys.size() < 2) throw std::invalid_argument("a line fit needs at least two points");
  const double n = static_cast<double>(ys.size());
  const double mx = (n - 1) / 2.0;
  double my = 0.0;
  for (double y : ys) my += y;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double dx = static_cast<double>(i) - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

Stage2Report stage2_mode(const std::vector<double>& curve, const Stage2Thresholds& thresholds) {
  if (curve.size() < 4) throw std::invalid_argument("stage2_mode needs at least four points");
  for (double v : curve) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite accuracy value");
  }
  const std::size_t half = curve.size() / 2;
  const std::size_t quarter = std::max<std::size_t>(2, curve.size() / 4);
  const auto head = fit_line({curve.begin(), curve.begin() + static_cast<std::ptrdiff_t>(half)});
  const auto tail = fit_line({curve.end() - static_cast<std::ptrdiff_t>(quarter), curve.end()});

  Stage2Report r;
  r.thresholds = thresholds;
  r.first_half_slope = head.slope;
  r.first_half_r2 = head.r2;
  r.last_quartile_slope = tail.slope;
  const bool rising = head.slope > thresholds.min_slope && head.r2 >= thresholds.min_r2;
  const bool flattened = tail.slope < thresholds.plateau_fraction * head.slope;
  r.mode = rising && flattened ? Stage2Mode::kPlateau : Stage2Mode::kFluctuating;
  return r;
}

}  // namespace sqlgrade
