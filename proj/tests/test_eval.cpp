#include <doctest.h>

#include <algorithm>

#include "faqfuse/error.hpp"
#include "faqfuse/eval.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace faqfuse;

namespace {

RetrievalResult result(std::string gold, std::vector<std::string> ranking) {
  RetrievalResult r;
  r.query_id = "q";
  r.gold_answer_id = std::move(gold);
  r.chosen_answer_id = ranking.empty() ? "" : ranking.front();
  r.ranked_answer_ids = std::move(ranking);
  return r;
}

}  // namespace

TEST_CASE("mrr of ranks 1, 2 and 4") {
  const std::vector<RetrievalResult> rs{result("a", {"a", "b"}), result("a", {"b", "a"}),
                                        result("a", {"b", "c", "d", "a"})};
  CHECK(mrr(rs) == doctest::Approx(0.5833333333333334).epsilon(1e-12));
}

TEST_CASE("missing gold contributes zero reciprocal rank") {
  const std::vector<RetrievalResult> rs{result("a", {"a"}), result("z", {"a", "b"})};
  CHECK(mrr(rs) == 0.5);
  CHECK_THROWS_AS(mrr(std::vector<RetrievalResult>{}), Error);
}

TEST_CASE("classification metrics on a small confusion") {
  // Gold A A B B, always predicting A.
  const std::vector<RetrievalResult> rs{result("A", {"A"}), result("A", {"A"}), result("B", {"A", "B"}),
                                        result("B", {"A", "B"})};
  const auto m = classification_metrics(rs);
  CHECK(m.accuracy == 0.5);
  CHECK(m.precision == 0.25);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(m.count == 4);
}

TEST_CASE("perfect predictions score one everywhere") {
  const std::vector<RetrievalResult> rs{result("A", {"A", "B"}), result("B", {"B"}), result("C", {"C", "A"})};
  const auto m = classification_metrics(rs);
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(mrr(rs) == 1.0);
}

TEST_CASE("matching metrics") {
  const std::vector<int> pred{1, 1, 0, 0};
  const std::vector<int> gold{1, 0, 1, 0};
  const auto m = matching_metrics(pred, gold);
  CHECK(m.accuracy == 0.5);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == 0.5);
  CHECK_FALSE(m.mrr.has_value());

  const std::vector<int> none{0, 0, 0, 0};
  const auto n = matching_metrics(none, gold);
  CHECK(n.precision == 0.0);
  CHECK(n.recall == 0.0);
  CHECK(n.f1 == 0.0);
  CHECK(n.accuracy == 0.5);

  CHECK_THROWS_AS(matching_metrics(std::vector<int>{1}, gold), Error);
  CHECK_THROWS_AS(matching_metrics(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST_CASE("harmonic mean") {
  CHECK(harmonic_mean(0.0, 0.0) == 0.0);
  CHECK(harmonic_mean(0.5, 0.5) == 0.5);
  CHECK(harmonic_mean(0.25, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("mrr is at least accuracy and metrics stay in range") {
  oracle::Fixtures gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RetrievalResult> rs;
    const auto n = gen.uniform(1, 20);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> ranking;
      for (std::size_t a = 0; a < 6; ++a) ranking.push_back("a" + std::to_string(a));
      std::shuffle(ranking.begin(), ranking.end(), gen.rng());
      ranking.resize(gen.uniform(1, 6));
      rs.push_back(result("a" + std::to_string(gen.uniform(0, 6)), ranking));
    }
    const auto m = classification_metrics(rs);
    const double r = mrr(rs);
    CHECK(r >= m.accuracy - 1e-15);
    for (double v : {m.precision, m.recall, m.f1, m.accuracy, r}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("evaluate_retrieval on the collection itself") {
  const auto corpus = fixtures::synthetic(40);
  const Pipeline pipeline(corpus, Bm25Index::build(corpus, {}), std::nullopt, BaselineScorer::fit(corpus),
                          {.alpha = 1.0, .vote_m = 5, .voting_enabled = false});
  const auto queries = eval_queries(corpus, corpus);
  REQUIRE(queries.size() == corpus.size());
  std::vector<RetrievalResult> results;
  const auto m = evaluate_retrieval(pipeline, queries, &results);
  CHECK(m.accuracy == 1.0);
  CHECK(m.mrr == 1.0);
  CHECK(results.size() == corpus.size());
  for (const auto& r : results) {
    auto sorted = r.ranked_answer_ids;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
}

TEST_CASE("held-out gold answers absent from the collection never match") {
  const auto train = fixtures::corpus({{"how old are you", "thirty"}, {"where do you live", "taipei"}});
  const auto held = fixtures::corpus({{"how old are you", "forty"}});
  const auto queries = eval_queries(train, held);
  REQUIRE(queries.size() == 1);
  const Pipeline pipeline(train, Bm25Index::build(train, {}), std::nullopt, BaselineScorer::fit(train), {});
  const auto m = evaluate_retrieval(pipeline, queries);
  CHECK(m.accuracy == 0.0);
  CHECK(m.mrr == 0.0);
}

TEST_CASE("sweep produces one deterministic row per K") {
  const auto train = fixtures::synthetic(30);
  const auto queries = eval_queries(train, train);
  SweepSettings settings;
  settings.plsa.max_iterations = 20;
  settings.top_l = 3;
  settings.scorer_factory = [](const Corpus& c) { return BaselineScorer::fit(c); };
  const std::vector<std::size_t> ks{1, 2, 4, 100000};
  const auto rows = sweep_topics(train, queries, ks, settings);
  REQUIRE(rows.size() == ks.size());
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    CHECK(rows[i].k_topics == ks[i]);
    REQUIRE(rows[i].report.has_value());
    CHECK(rows[i].error.empty());
    CHECK(rows[i].triplets == ks[i] * 3 * 2);
  }
  CHECK_FALSE(rows.back().report.has_value());
  CHECK_FALSE(rows.back().error.empty());

  const auto again = sweep_topics(train, queries, ks, settings);
  CHECK(sweep_csv(rows) == sweep_csv(again));
  CHECK(sweep_json(rows) == sweep_json(again));
  CHECK(sweep_csv(rows).rfind("k_topics", 0) == 0);

  CHECK_THROWS_AS(sweep_topics(train, queries, std::vector<std::size_t>{}, settings), Error);
  settings.scorer_factory = nullptr;
  CHECK_THROWS_AS(sweep_topics(train, queries, ks, settings), Error);
}
