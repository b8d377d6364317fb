#include <gtest/gtest.h>

#include <random>

#include "fixtures.h"
#include "oracles.h"
#include "sqlgrade/metrics.h"
#include "sqlgrade/rng.h"

namespace sqlgrade {
namespace {
using namespace sqlgrade::testing;

ResultTable cols(std::vector<std::vector<CellValue>> columns) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < columns.size(); ++i) names.push_back("c" + std::to_string(i));
  return ResultTable(std::move(names), std::move(columns));
}

// Golden (a, b, c) plus `extra` candidate columns that match nothing.
ResultTable with_extras(int extra) {
  std::vector<std::vector<CellValue>> c{{I(1), I(2)}, {T("x"), T("y")}, {R(0.5), R(1.5)}};
  for (int i = 0; i < extra; ++i) c.push_back({T("e" + std::to_string(i)), T("f")});
  return cols(c);
}

TEST(MatchColumns, SingleMultisetMatch) {
  const auto m = match_columns(cols({{I(1), I(2)}}), cols({{I(2), I(1)}}), EvalConfig{});
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(m.extra_candidate_count, 0u);
}

TEST(MatchColumns, InjectivityForbidsDoubleUse) {
  const auto m = match_columns(cols({{I(1)}, {I(1)}}), cols({{I(1)}}), EvalConfig{});
  EXPECT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.unmatched_golden.size(), 1u);
}

TEST(MatchColumns, GreedyTakesLowestUnusedCandidate) {
  EvalConfig cfg;
  cfg.matching_mode = MatchingMode::kGreedy;
  const auto m = match_columns(cols({{I(1)}, {I(1)}}), cols({{I(2)}, {I(1)}, {I(1)}}), cfg);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0].second, 1u);
  EXPECT_EQ(m.pairs[1].second, 2u);
}

TEST(MatchColumns, RowCountMismatchNeverMatches) {
  const auto m = match_columns(cols({{I(1)}}), cols({{I(1), I(1)}}), EvalConfig{});
  EXPECT_TRUE(m.pairs.empty());
}

TEST(Evaluate, Identity) {
  const auto t = with_extras(0);
  const auto o = evaluate(t, t, EvalConfig{});
  EXPECT_EQ(o.ex_exact, 1);
  EXPECT_EQ(o.ex_b, 1);
  EXPECT_EQ(o.ex_f, 1.0);
}

TEST(Evaluate, TauIsStrict) {
  EvalConfig cfg;
  const auto golden = with_extras(0);
  const auto four = evaluate(golden, with_extras(4), cfg);
  EXPECT_EQ(four.ex_b, 1);
  EXPECT_EQ(four.ex_exact, 0);
  EXPECT_EQ(four.matching.extra_candidate_count, 4u);
  const auto five = evaluate(golden, with_extras(5), cfg);
  EXPECT_EQ(five.ex_b, 0);
  EXPECT_EQ(five.ex_f, 1.0);
}

TEST(Evaluate, HalfMatch) {
  const auto o = evaluate(cols({{I(1)}, {I(2)}}), cols({{I(1)}}), EvalConfig{});
  EXPECT_EQ(o.ex_f, 0.5);
  EXPECT_EQ(o.ex_b, 0);
}

TEST(Evaluate, ZeroColumnGoldenIsVacuouslyMatched) {
  const auto o = evaluate(ResultTable{}, cols({{I(1)}}), EvalConfig{});
  EXPECT_EQ(o.ex_f, 1.0);
}

TEST(Evaluate, ToleranceGridMatchesNearbyReals) {
  EvalConfig cfg;
  cfg.policy.real_tolerance.absolute = 1e-6;
  const auto o = evaluate(cols({{R(1.0)}}), cols({{R(1.00000004)}}), cfg);
  EXPECT_EQ(o.ex_f, 1.0);
  EXPECT_EQ(oracle_ex_f(cols({{R(1.0)}}), cols({{R(1.00000004)}}), cfg.policy), 1.0);
  cfg.policy = NormalizationPolicy::exact();
  EXPECT_EQ(evaluate(cols({{R(1.0)}}), cols({{R(1.00000004)}}), cfg).ex_f, 0.0);
}

TEST(EvalConfig, RejectsTauBelowOne) {
  EvalConfig cfg;
  cfg.tau = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(EvaluateBatch, EmptyAndMeans) {
  EXPECT_FALSE(evaluate_batch({}, EvalConfig{}).means.has_value());
  const auto t = cols({{I(1)}});
  const auto b = evaluate_batch({{t, t}, {t, cols({{I(2)}})}}, EvalConfig{});
  ASSERT_TRUE(b.means);
  EXPECT_EQ(b.means->ex_f, 0.5);
  EXPECT_EQ(b.means->ex_b, 0.5);
}

TEST(EvaluateBatchProperty, MeansEqualRecomputation) {
  std::mt19937_64 rng(3);
  std::vector<std::pair<ResultTable, ResultTable>> items;
  for (int i = 0; i < 100; ++i) {
    auto g = random_table(rng, 4, 5);
    auto c = random_candidate_for(g, rng, 6);
    items.emplace_back(std::move(g), std::move(c));
  }
  const EvalConfig cfg;
  const auto b = evaluate_batch(items, cfg);
  double ex_f = 0;
  for (const auto& [g, c] : items) ex_f += oracle_ex_f(g, c, cfg.policy);
  ASSERT_TRUE(b.means);
  EXPECT_NEAR(b.means->ex_f, ex_f / 100.0, 1e-15);
}

TEST(MatchingProperty, BipartiteEqualsBruteForceAndDominatesGreedy) {
  std::mt19937_64 rng(5);
  EvalConfig bip, greedy;
  greedy.matching_mode = MatchingMode::kGreedy;
  for (int trial = 0; trial < 1500; ++trial) {
    const auto g = random_table(rng, 6, 6);
    const auto c = random_candidate_for(g, rng, 6);
    const auto m = match_columns(g, c, bip);
    const auto mg = match_columns(g, c, greedy);
    ASSERT_EQ(m.pairs.size(), oracle_max_matching(g, c, bip.policy));
    ASSERT_GE(m.pairs.size(), mg.pairs.size());
  }
}

TEST(MatchingProperty, MatchingInvariantsHold) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const auto g = random_table(rng, 6, 5);
    const auto c = random_candidate_for(g, rng, 6);
    const auto m = match_columns(g, c, EvalConfig{});
    std::vector<bool> gl(g.column_count()), cl(c.column_count());
    for (auto [a, b] : m.pairs) {
      ASSERT_FALSE(gl[a]);
      ASSERT_FALSE(cl[b]);
      gl[a] = cl[b] = true;
      ASSERT_TRUE(oracle_columns_equal(g, a, c, b, EvalConfig{}.policy));
    }
    ASSERT_EQ(m.pairs.size() + m.unmatched_golden.size(), g.column_count());
    ASSERT_EQ(m.extra_candidate_count, c.column_count() - m.pairs.size());
  }
}

TEST(EvaluateProperty, PermutationInvarianceAndChain) {
  std::mt19937_64 rng(13);
  const EvalConfig cfg;
  for (int trial = 0; trial < 500; ++trial) {
    const auto g = random_table(rng, 5, 5);
    const auto c = random_candidate_for(g, rng, 6);
    const auto base = evaluate(g, c, cfg);
    // reversed candidate columns, shuffled rows in both tables
    std::vector<std::size_t> rows(c.row_count());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    seeded_shuffle(rows, rng);
    std::vector<std::vector<CellValue>> pc;
    std::vector<std::string> names;
    for (std::size_t k = c.column_count(); k-- > 0;) {
      std::vector<CellValue> col;
      for (auto r : rows) col.push_back(c.column(k)[r]);
      pc.push_back(col);
      names.push_back(c.column_names()[k]);
    }
    const ResultTable permuted(names, pc);
    const auto o = evaluate(g, permuted, cfg);
    ASSERT_EQ(o.ex_f, base.ex_f);
    ASSERT_EQ(o.ex_b, base.ex_b);
    ASSERT_TRUE(base.ex_exact == 0 || base.ex_b == 1);
    ASSERT_TRUE(base.ex_b == 0 || base.ex_f == 1.0);
  }
}

TEST(EvaluateProperty, NonMatchingExtraColumnLeavesExFUnchanged) {
  std::mt19937_64 rng(17);
  const EvalConfig cfg;
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = random_table(rng, 4, 4);
    const auto c = random_candidate_for(g, rng, 4);
    auto columns = c.columns();
    auto names = c.column_names();
    // A text value absent from the generator alphabet never matches.
    columns.push_back(std::vector<CellValue>(c.row_count(), T("zzz")));
    names.push_back("extra");
    const ResultTable wider(names, columns);
    if (c.row_count() == 0) continue;  // two empty columns would match
    ASSERT_EQ(evaluate(g, wider, cfg).ex_f, evaluate(g, c, cfg).ex_f);
  }
}

TEST(EvaluateProperty, ExBMonotoneInTau) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = random_table(rng, 3, 4);
    const auto c = random_candidate_for(g, rng, 6);
    int prev = 0;
    for (int tau = 1; tau <= 8; ++tau) {
      EvalConfig cfg;
      cfg.tau = tau;
      const int b = evaluate(g, c, cfg).ex_b;
      ASSERT_GE(b, prev);
      prev = b;
    }
  }
}

TEST(HopcroftKarp, KnownGraph) {
  // Left 0 -> {0, 1}, left 1 -> {0}, left 2 -> {1}: size 2.
  const auto m = maximum_bipartite_matching({{0, 1}, {0}, {1}}, 2);
  int matched = 0;
  for (const auto& x : m) matched += x.has_value();
  EXPECT_EQ(matched, 2);
}

}  // namespace
}  // namespace sqlgrade
