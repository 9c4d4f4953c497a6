#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "faqfuse/bm25.hpp"
#include "faqfuse/knowledge.hpp"
#include "faqfuse/plsa.hpp"
#include "faqfuse/rank.hpp"

namespace faqfuse {

struct RetrievalResult {
  std::string query_id;
  std::string gold_answer_id;
  std::vector<std::string> ranked_answer_ids;  ///< deduplicated, best RS first
  std::string chosen_answer_id;
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::optional<double> mrr;  ///< retrieval only
  std::size_t count = 0;

  bool operator==(const MetricsReport&) const = default;
};

/// Mean of 1/rank(gold); a gold answer missing from the ranking contributes 0.
double mrr(std::span<const RetrievalResult> results);

/// Accuracy plus macro-averaged precision/recall over gold classes; a class
/// that is never predicted has precision 0. F1 is the harmonic mean of the
/// two macro averages.
MetricsReport classification_metrics(std::span<const RetrievalResult> results);

/// Binary precision/recall/F1 on the positive class plus accuracy. Precision
/// is 0 when nothing is predicted positive, recall 0 when no gold is positive.
MetricsReport matching_metrics(std::span<const int> predictions, std::span<const int> golds);

double harmonic_mean(double a, double b);

RetrievalResult to_result(std::string query_id, std::string gold_answer_id, const RankedList& ranked);

struct EvalQuery {
  std::string id;
  std::string text;
  std::string gold_answer_id;
};

/// Questions of `split` as queries against `collection`. Gold answers that do
/// not occur in the collection get an id no ranking can contain.
std::vector<EvalQuery> eval_queries(const Corpus& collection, const Corpus& split);

MetricsReport evaluate_retrieval(const Pipeline& pipeline, std::span<const EvalQuery> queries,
                                 std::vector<RetrievalResult>* results = nullptr);
MetricsReport evaluate_matching(const Pipeline& pipeline, std::span<const QuestionPair> pairs,
                                std::vector<MatchResult>* results = nullptr);

nlohmann::json to_json(const MetricsReport& report);

using ScorerFactory = std::function<std::shared_ptr<const RelevanceScorer>(const Corpus&)>;

struct SweepSettings {
  Bm25Params bm25;
  PlsaConfig plsa;  ///< k_topics is overridden per row
  std::size_t top_l = 10;
  FusionConfig fusion;
  InjectionConfig injection;
  std::optional<KnowledgeBase> external;
  ScorerFactory scorer_factory;
};

struct SweepRow {
  std::size_t k_topics = 0;
  std::optional<MetricsReport> report;
  std::size_t triplets = 0;
  double log_likelihood = 0.0;
  std::string error;
};

/// One PLSA model per K (shared seed), topical triplets merged with any
/// external knowledge, evaluated on `queries`. A failing K is recorded and the
/// sweep continues.
std::vector<SweepRow> sweep_topics(const Corpus& train, std::span<const EvalQuery> queries,
                                   std::span<const std::size_t> k_values, const SweepSettings& settings);

std::string sweep_csv(std::span<const SweepRow> rows);
nlohmann::json sweep_json(std::span<const SweepRow> rows);

}  // namespace faqfuse
