#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "littriage/decision.hpp"
#include "littriage/error.hpp"
#include "littriage/random.hpp"
#include "oracles.hpp"

using namespace littriage;

namespace {

CategoryGroup group(ClassificationMode mode, std::size_t n) {
  CategoryGroup g;
  g.name = "G";
  g.mode = mode;
  for (std::size_t i = 0; i < n; ++i) {
    g.labels.push_back("L" + std::to_string(i));
    g.phrasings.push_back({"phrase " + std::to_string(i)});
  }
  return g;
}

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t c, bool normalize) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(c);
  for (auto& v : p) v = std::round(u(rng) * 20.0) / 20.0;  // coarse, so ties happen
  if (normalize) {
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    if (sum > 0) {
      for (auto& v : p) v /= sum;
    }
  }
  return p;
}

}  // namespace

TEST(DecideMulticlass, Examples) {
  const std::vector<double> a{0.1, 0.7, 0.2};
  EXPECT_EQ(decide_multiclass(a).index, 1u);
  EXPECT_FALSE(decide_multiclass(a).tied);
  const std::vector<double> b{0.5, 0.5};
  EXPECT_EQ(decide_multiclass(b).index, 0u);
  EXPECT_TRUE(decide_multiclass(b).tied);
  EXPECT_THROW(decide_multiclass(std::vector<double>{}), DataError);
}

TEST(DecideMultilabel, Examples) {
  const auto half = ThresholdConfig::uniform(0.5);
  EXPECT_EQ(decide_multilabel(std::vector<double>{0.6, 0.4, 0.55}, half), (std::vector<std::size_t>{0, 2}));
  EXPECT_TRUE(decide_multilabel(std::vector<double>{0.2, 0.3}, half).empty());
  EXPECT_TRUE(decide_multilabel(std::vector<double>{0.5}, half).empty());
  EXPECT_EQ(decide_multilabel(std::vector<double>{0.8, 0.4, 0.6}, ThresholdConfig::per_label({0.5, 0.5, 0.7})),
            std::vector<std::size_t>{0});
}

TEST(DecideProperty, MatchesOraclesAndInvariants) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t c = 2 + uniform_below(rng, 9);
    const auto p = random_scores(rng, c, true);
    const auto choice = decide_multiclass(p);
    const auto [index, tied] = oracle::argmax(p);
    EXPECT_EQ(choice.index, index);
    EXPECT_EQ(choice.tied, tied);

    for (double k : {0.5, 3.0, 1e3}) {
      std::vector<double> scaled(p);
      for (auto& v : scaled) v *= k;
      EXPECT_EQ(decide_multiclass(scaled).index, choice.index);
    }

    const auto q = random_scores(rng, c, false);
    std::vector<double> xi(c);
    for (auto& v : xi) v = 0.05 + 0.9 * static_cast<double>(uniform_below(rng, 19)) / 18.0;
    const auto config = ThresholdConfig::per_label(xi);
    const auto chosen = decide_multilabel(q, config);
    EXPECT_EQ(chosen, oracle::filter_above(q, xi));

    auto raised = xi;
    const auto bump = uniform_below(rng, c);
    raised[bump] = std::min(0.99, raised[bump] + 0.2);
    const auto fewer = decide_multilabel(q, ThresholdConfig::per_label(raised));
    for (auto l : fewer) EXPECT_NE(std::find(chosen.begin(), chosen.end(), l), chosen.end());

    const double uniform = 0.5;
    const auto above = decide_multilabel(q, ThresholdConfig::uniform(uniform));
    if (above.size() == 1 && !oracle::argmax(q).second && q[above[0]] == *std::max_element(q.begin(), q.end())) {
      EXPECT_EQ(above[0], decide_multiclass(q).index);
    }
  }
}

TEST(Thresholds, Validation) {
  EXPECT_THROW(ThresholdConfig::uniform(0.0).validate(3), UsageError);
  EXPECT_THROW(ThresholdConfig::uniform(1.0).validate(3), UsageError);
  EXPECT_THROW(ThresholdConfig::per_label({0.5, 0.5}).validate(3), UsageError);
  EXPECT_NO_THROW(ThresholdConfig::per_label({0.2, 0.5, 0.9}).validate(3));
  EXPECT_EQ(ThresholdConfig::uniform(0.3).expand(2), (std::vector<double>{0.3, 0.3}));
}

TEST(BuildInput, Modes) {
  const auto r = make_record("1", "T", "A", 2020);
  EXPECT_EQ(build_input(r, InputMode::appended), (ModelInput{"T. A", std::nullopt}));
  EXPECT_EQ(build_input(r, InputMode::title), (ModelInput{"T", std::nullopt}));
  EXPECT_EQ(build_input(r, InputMode::abstract), (ModelInput{"A", std::nullopt}));
  EXPECT_EQ(build_input(r, InputMode::fused), (ModelInput{"A", std::string("T")}));
}

TEST(BuildInput, EmptyAbstractNeedsTitleMode) {
  const auto r = make_record("1", "T", "", 2020);
  EXPECT_THROW(build_input(r, InputMode::abstract), DataError);
  EXPECT_THROW(build_input(r, InputMode::fused), DataError);
  EXPECT_THROW(build_input(r, InputMode::appended), DataError);
  EXPECT_EQ(build_input(r, InputMode::title).primary, "T");
}

TEST(BuildInput, AppendedTruncatesAbstractOnly) {
  const auto r = make_record("1", "Short title", "one two three four five six seven", 2020);
  const auto in = build_input(r, InputMode::appended, 25);
  EXPECT_EQ(in.primary, "Short title. one two");
  EXPECT_LE(in.primary.size(), 25u);
}

TEST(InputModes, ParseRoundTrip) {
  for (auto m : {InputMode::abstract, InputMode::title, InputMode::fused, InputMode::appended}) {
    EXPECT_EQ(parse_input_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_input_mode("summary"), UsageError);
}

TEST(Fuse, MeanAndUnitSum) {
  const auto f = fuse_scores(LabelScores{{0.2, 0.8}}, LabelScores{{0.4, 0.6}});
  EXPECT_NEAR(f[0], 0.3, 1e-15);
  EXPECT_NEAR(f[1], 0.7, 1e-15);
  EXPECT_THROW(fuse_scores(LabelScores{{0.2, 0.8}}, LabelScores{{1.0}}), DataError);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const auto c = 2 + uniform_below(rng, 8);
    const auto a = random_scores(rng, c, true);
    const auto b = random_scores(rng, c, true);
    if (std::accumulate(a.begin(), a.end(), 0.0) == 0.0 || std::accumulate(b.begin(), b.end(), 0.0) == 0.0) continue;
    const auto fused = fuse_scores(LabelScores{a}, LabelScores{b});
    EXPECT_NEAR(std::accumulate(fused.scores.begin(), fused.scores.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(Hierarchical, BinaryRequestsAndDecision) {
  auto g = group(ClassificationMode::multilabel, 3);
  g.decomposition = Decomposition::hierarchical;
  const auto r = binary_request("text", g, 1);
  EXPECT_EQ(r.label_phrases, (std::vector<std::string>{"phrase 1", "not phrase 1"}));
  EXPECT_FALSE(r.multi_label);

  std::vector<std::optional<LabelScores>> per_label{LabelScores{{0.8, 0.2}}, LabelScores{{0.4, 0.6}},
                                                    LabelScores{{0.6, 0.4}}};
  EXPECT_EQ(hierarchical_decide(per_label, ThresholdConfig::per_label({0.5, 0.5, 0.7}), g.labels),
            std::vector<std::size_t>{0});
  per_label[0] = LabelScores{{0.1, 0.9}};
  per_label[2] = LabelScores{{0.1, 0.9}};
  EXPECT_TRUE(hierarchical_decide(per_label, ThresholdConfig::uniform(0.5), g.labels).empty());
  per_label[1].reset();
  EXPECT_THROW(hierarchical_decide(per_label, ThresholdConfig::uniform(0.5), g.labels), DataError);
}

TEST(Decisions, MakeDecisionFlags) {
  const auto mc = group(ClassificationMode::multiclass, 2);
  const auto tied = make_decision("1", mc, InputMode::abstract, LabelScores{{0.5, 0.5}}, ThresholdConfig::uniform(0.5));
  EXPECT_TRUE(tied.tied);
  EXPECT_EQ(tied.labels, std::vector<std::size_t>{0});
  const auto ml = group(ClassificationMode::multilabel, 2);
  const auto empty = make_decision("1", ml, InputMode::title, LabelScores{{0.1, 0.2}}, ThresholdConfig::uniform(0.5));
  EXPECT_TRUE(empty.empty);
  EXPECT_TRUE(empty.labels.empty());
}

TEST(Decisions, JsonlRoundTrip) {
  const std::vector<CategoryGroup> groups{group(ClassificationMode::multiclass, 3), [] {
                                            auto g = group(ClassificationMode::multilabel, 2);
                                            g.name = "M";
                                            return g;
                                          }()};
  std::vector<Decision> ds;
  ds.push_back(make_decision("1", groups[0], InputMode::fused, LabelScores{{0.1, 0.6, 0.3}}, ThresholdConfig::uniform(0.5)));
  auto d = make_decision("2", groups[1], InputMode::appended, LabelScores{{1.0 / 3.0, 0.2}}, ThresholdConfig::uniform(0.5));
  d.title_fallback = true;
  ds.push_back(d);
  std::string doc;
  for (const auto& x : ds) doc += serialize_decision(x, x.group == "G" ? groups[0] : groups[1]) + "\n";
  EXPECT_EQ(parse_decisions(doc, groups), ds);
  EXPECT_NE(doc.find(R"("labels":["L1"])"), std::string::npos);
  EXPECT_NE(doc.find(R"("flags":["empty","title_fallback"])"), std::string::npos);
  EXPECT_THROW(parse_decisions(R"({"pmid":"1","group":"Nope"})", groups), DataError);
}

TEST(Decisions, CsvHasOneScoreColumnPerLabel) {
  const auto g = group(ClassificationMode::multiclass, 2);
  const auto d = make_decision("9", g, InputMode::title, LabelScores{{0.25, 0.75}}, ThresholdConfig::uniform(0.5));
  EXPECT_EQ(decisions_csv({d}, g), "pmid,input_mode,labels,flags,L0,L1\n9,title,L1,,0.25,0.75\n");
}

TEST(Sweep, SmallestThresholdOnTies) {
  std::vector<LabelScores> preds(10, LabelScores{{0.9, 0.1}});
  std::vector<std::vector<std::size_t>> gold(10, std::vector<std::size_t>{0});
  const auto grid = default_threshold_grid();
  const auto result = sweep_thresholds(preds, gold, 2, grid);
  EXPECT_DOUBLE_EQ(result.thresholds.at(0), 0.05);
  EXPECT_DOUBLE_EQ(result.objective[0], 1.0);
  EXPECT_DOUBLE_EQ(result.thresholds.at(1), 0.5);  // absent label: grid median, with a warning
  EXPECT_EQ(result.warnings.size(), 1u);
}

TEST(Sweep, DefaultGrid) {
  const auto grid = default_threshold_grid();
  ASSERT_EQ(grid.size(), 19u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.05);
  EXPECT_DOUBLE_EQ(grid.back(), 0.95);
}

TEST(SweepProperty, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + uniform_below(rng, 40);
    const std::size_t labels = 1 + uniform_below(rng, 4);
    std::vector<LabelScores> preds;
    std::vector<std::vector<double>> raw;
    std::vector<std::vector<std::size_t>> gold;
    std::vector<std::set<std::size_t>> gold_sets;
    for (std::size_t r = 0; r < n; ++r) {
      raw.push_back(random_scores(rng, labels, false));
      preds.push_back(LabelScores{raw.back()});
      std::vector<std::size_t> g;
      for (std::size_t l = 0; l < labels; ++l) {
        if (uniform_below(rng, 3) == 0) g.push_back(l);
      }
      gold_sets.emplace_back(g.begin(), g.end());
      gold.push_back(std::move(g));
    }
    std::vector<double> grid{0.9, 0.1, 0.3, 0.5, 0.7, 0.2};
    const auto result = sweep_thresholds(preds, gold, labels, grid);
    EXPECT_EQ(result.thresholds.expand(labels), oracle::exhaustive_sweep(raw, gold_sets, labels, grid));
  }
}

TEST(Sweep, InputValidation) {
  const std::vector<double> grid{0.5};
  EXPECT_THROW(sweep_thresholds({}, {}, 2, grid), UsageError);
  const std::vector<double> bad{1.5};
  EXPECT_THROW(sweep_thresholds({LabelScores{{0.1, 0.2}}}, {{0}}, 2, bad), UsageError);
  EXPECT_EQ(parse_sweep_objective("recall"), SweepObjective::recall);
  EXPECT_THROW(parse_sweep_objective("auc"), UsageError);
}
