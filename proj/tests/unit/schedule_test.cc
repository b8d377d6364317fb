#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sqlgrade/schedule.h"

namespace sqlgrade {
namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b)); }

TEST(Schedule, StageOneReferenceValues) {
  const ScheduleSpec s;  // S = 1000, 1e-7 -> 1e-5
  EXPECT_EQ(lr_at(0, s), 1e-7);
  EXPECT_EQ(lr_at(15, s), 1e-7);
  EXPECT_EQ(lr_at(29, s), 1e-7);
  EXPECT_NEAR(lr_at(100, s), 1e-5, 1e-5 * 1e-12);
  const double want = 1e-7 + (1e-5 - 1e-7) * (1 + std::cos(std::numbers::pi * 450.0 / 900.0)) / 2;
  EXPECT_LE(rel(lr_at(550, s), want), 1e-12);
  // linear ramp midpoint
  EXPECT_LE(rel(lr_at_position(65, s), 1e-7 + (1e-5 - 1e-7) * 0.5), 1e-12);
}

TEST(Schedule, ContinuityAtSegmentBoundaries) {
  ScheduleSpec s;
  s.total_steps = 777;
  s.floor_lr = 1e-8;
  for (double b : {0.03 * 777, 0.10 * 777}) {
    const double left = lr_at_position(std::nextafter(b, 0.0), s);
    const double right = lr_at_position(b, s);
    EXPECT_LE(rel(left, right), 1e-12) << b;
  }
  EXPECT_LE(rel(lr_at_position(777, s), 1e-8), 1e-12);
}

TEST(Schedule, CosineSegmentIsMonotone) {
  const ScheduleSpec s;
  for (std::int64_t i = 101; i < 1000; ++i) ASSERT_LE(lr_at(i, s), lr_at(i - 1, s));
  for (std::int64_t i = 31; i <= 100; ++i) ASSERT_GE(lr_at(i, s), lr_at(i - 1, s));
}

TEST(Schedule, StageTwoVariants) {
  ScheduleSpec plateau;
  plateau.stage = ScheduleStage::kTwoPlateau;
  EXPECT_EQ(lr_at(0, plateau), 1e-5);
  EXPECT_LE(rel(lr_at(500, plateau), 1e-7 + (1e-5 - 1e-7) * 0.5), 1e-12);

  ScheduleSpec fluct;
  fluct.stage = ScheduleStage::kTwoFluctuating;
  fluct.stage2_start_lr_basis = 4e-6;
  EXPECT_EQ(lr_at(0, fluct), 2e-6);
  for (std::int64_t i = 1; i < 1000; ++i) ASSERT_LE(lr_at(i, fluct), lr_at(i - 1, fluct));
  fluct.stage2_start_lr_basis.reset();
  EXPECT_THROW(fluct.validate(), std::invalid_argument);
}

TEST(Schedule, CheckpointBasisFeedsStageTwo) {
  const ScheduleSpec one;
  EXPECT_EQ(checkpoint_lr(550, one), lr_at(550, one));
}

TEST(Schedule, Validation) {
  ScheduleSpec s;
  EXPECT_THROW(lr_at(1000, s), std::out_of_range);
  EXPECT_THROW(lr_at(-1, s), std::out_of_range);
  s.warmup_frac = 0.2;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = ScheduleSpec{};
  s.floor_lr = 1e-6;  // above warmup_lr
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = ScheduleSpec{};
  s.total_steps = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_THROW(parse_schedule_stage("three"), std::invalid_argument);
  EXPECT_EQ(parse_schedule_stage("two-plateau"), ScheduleStage::kTwoPlateau);
  EXPECT_EQ(to_string(ScheduleStage::kTwoFluctuating), "two-fluctuating");
}

TEST(Schedule, CsvExport) {
  ScheduleSpec s;
  s.total_steps = 40;
  const auto csv = schedule_csv(s);
  EXPECT_EQ(csv.rfind("step,lr\n0,1e-07\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 41);
}

TEST(Stage2, ReferenceCurve) {
  const auto r = stage2_mode({0.1, 0.3, 0.5, 0.55, 0.56, 0.56});
  EXPECT_EQ(r.mode, Stage2Mode::kPlateau);
  EXPECT_NEAR(r.first_half_slope, 0.2, 1e-12);
  EXPECT_NEAR(r.last_quartile_slope, 0.0, 1e-12);
}

TEST(Stage2, Archetypes) {
  std::vector<double> rise_flat;
  for (int i = 0; i < 10; ++i) rise_flat.push_back(0.1 * i);
  for (int i = 0; i < 10; ++i) rise_flat.push_back(0.9);
  EXPECT_EQ(stage2_mode(rise_flat).mode, Stage2Mode::kPlateau);

  const std::vector<double> noise{0.5, 0.52, 0.48, 0.51, 0.49, 0.5, 0.53, 0.47, 0.5, 0.5, 0.52, 0.48};
  EXPECT_EQ(stage2_mode(noise).mode, Stage2Mode::kFluctuating);

  std::vector<double> still_rising;
  for (int i = 0; i < 12; ++i) still_rising.push_back(0.05 * i);
  EXPECT_EQ(stage2_mode(still_rising).mode, Stage2Mode::kFluctuating);

  EXPECT_THROW(stage2_mode({0.1, 0.2, 0.3}), std::invalid_argument);
  Stage2Thresholds strict;
  strict.min_slope = 1.0;
  EXPECT_EQ(stage2_mode({0.1, 0.3, 0.5, 0.55, 0.56, 0.56}, strict).mode, Stage2Mode::kFluctuating);
}

TEST(FitLine, ExactLineAndConstant) {
  const auto f = fit_line({1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2, 1e-12);
  EXPECT_NEAR(f.intercept, 1, 1e-12);
  EXPECT_NEAR(f.r2, 1, 1e-12);
  EXPECT_EQ(fit_line({2, 2, 2}).r2, 1.0);
}

}  // namespace
}  // namespace sqlgrade
