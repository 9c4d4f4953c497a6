#include "faqfuse/eval.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "faqfuse/error.hpp"

namespace faqfuse {

double harmonic_mean(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

double mrr(std::span<const RetrievalResult> results) {
  if (results.empty()) throw Error("mrr: no results");
  double total = 0.0;
  for (const auto& r : results) {
    if (r.ranked_answer_ids.empty()) throw Error("mrr: empty ranking for query " + r.query_id);
    for (std::size_t i = 0; i < r.ranked_answer_ids.size(); ++i)
      if (r.ranked_answer_ids[i] == r.gold_answer_id) {
        total += 1.0 / static_cast<double>(i + 1);
        break;
      }
  }
  return total / static_cast<double>(results.size());
}

MetricsReport classification_metrics(std::span<const RetrievalResult> results) {
  if (results.empty()) throw Error("classification metrics: no results");
  struct Counts {
    std::size_t gold = 0;
    std::size_t predicted = 0;
    std::size_t correct = 0;
  };
  std::map<std::string, Counts> classes;
  std::size_t correct = 0;
  for (const auto& r : results) {
    ++classes[r.gold_answer_id].gold;
    if (r.chosen_answer_id == r.gold_answer_id) {
      ++classes[r.gold_answer_id].correct;
      ++correct;
    }
  }
  for (const auto& r : results)
    if (auto it = classes.find(r.chosen_answer_id); it != classes.end()) ++it->second.predicted;

  MetricsReport report;
  report.count = results.size();
  report.accuracy = static_cast<double>(correct) / static_cast<double>(results.size());
  double precision = 0.0;
  double recall = 0.0;
  for (const auto& [label, c] : classes) {
    if (c.predicted > 0) precision += static_cast<double>(c.correct) / static_cast<double>(c.predicted);
    recall += static_cast<double>(c.correct) / static_cast<double>(c.gold);
  }
  report.precision = precision / static_cast<double>(classes.size());
  report.recall = recall / static_cast<double>(classes.size());
  report.f1 = harmonic_mean(report.precision, report.recall);
  return report;
}

MetricsReport matching_metrics(std::span<const int> predictions, std::span<const int> golds) {
  if (predictions.size() != golds.size()) throw Error("matching metrics: prediction/gold length mismatch");
  if (predictions.empty()) throw Error("matching metrics: no predictions");
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] != 0;
    const bool g = golds[i] != 0;
    if (p && g) ++tp;
    if (p && !g) ++fp;
    if (!p && g) ++fn;
    if (p == g) ++correct;
  }
  MetricsReport report;
  report.count = predictions.size();
  report.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  report.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  report.f1 = harmonic_mean(report.precision, report.recall);
  report.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
  return report;
}

RetrievalResult to_result(std::string query_id, std::string gold_answer_id, const RankedList& ranked) {
  RetrievalResult r;
  r.query_id = std::move(query_id);
  r.gold_answer_id = std::move(gold_answer_id);
  std::set<AnswerId> seen;
  for (const auto& entry : ranked.entries)
    if (seen.insert(entry.answer_id).second) r.ranked_answer_ids.push_back(answer_key(entry.answer_id));
  r.chosen_answer_id = answer_key(ranked.chosen_answer);
  return r;
}

std::vector<EvalQuery> eval_queries(const Corpus& collection, const Corpus& split) {
  std::map<std::string_view, AnswerId> lookup;
  for (AnswerId id = 0; id < collection.answers().size(); ++id) lookup.emplace(collection.answers()[id].text, id);
  std::vector<EvalQuery> queries;
  queries.reserve(split.size());
  for (const auto& pair : split.pairs()) {
    const auto it = lookup.find(pair.answer);
    queries.push_back({pair.id, pair.question, it != lookup.end() ? answer_key(it->second) : "unseen:" + pair.answer});
  }
  return queries;
}

MetricsReport evaluate_retrieval(const Pipeline& pipeline, std::span<const EvalQuery> queries,
                                 std::vector<RetrievalResult>* results) {
  std::vector<RetrievalResult> local;
  auto& out = results ? *results : local;
  out.clear();
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(to_result(q.id, q.gold_answer_id, pipeline.retrieve(q.text)));
  auto report = classification_metrics(out);
  report.mrr = mrr(out);
  return report;
}

MetricsReport evaluate_matching(const Pipeline& pipeline, std::span<const QuestionPair> pairs,
                                std::vector<MatchResult>* results) {
  std::vector<int> predictions;
  std::vector<int> golds;
  for (const auto& pair : pairs) {
    const auto m = pipeline.match(pair.left, pair.right);
    predictions.push_back(m.label);
    golds.push_back(pair.label);
    if (results) results->push_back(m);
  }
  return matching_metrics(predictions, golds);
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json j = {{"precision", report.precision},
                      {"recall", report.recall},
                      {"f1", report.f1},
                      {"accuracy", report.accuracy},
                      {"count", report.count}};
  if (report.mrr) j["mrr"] = *report.mrr;
  return j;
}

std::vector<SweepRow> sweep_topics(const Corpus& train, std::span<const EvalQuery> queries,
                                   std::span<const std::size_t> k_values, const SweepSettings& settings) {
  if (k_values.empty()) throw Error("sweep: no topic counts given");
  if (!settings.scorer_factory) throw Error("sweep: no scorer factory");
  const auto index = Bm25Index::build(train, settings.bm25);
  const auto scorer = settings.scorer_factory(train);

  std::vector<SweepRow> rows;
  for (const auto k : k_values) {
    SweepRow row;
    row.k_topics = k;
    try {
      auto plsa = settings.plsa;
      plsa.k_topics = k;
      const auto model = train_plsa(train, plsa);
      row.log_likelihood = model.final_log_likelihood;
      auto kb = triplets_from_topics(model, std::min(settings.top_l, model.vocabulary.size()));
      if (settings.external) kb = merge(*settings.external, kb);
      row.triplets = kb.size();
      const Pipeline pipeline(train, index, std::move(kb), scorer, settings.fusion, settings.injection);
      row.report = evaluate_retrieval(pipeline, queries);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string fixed(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

}  // namespace

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "k_topics,precision,recall,f1,accuracy,mrr,triplets,log_likelihood,error\n";
  for (const auto& row : rows) {
    out << row.k_topics << ',';
    if (row.report) {
      out << fixed(row.report->precision) << ',' << fixed(row.report->recall) << ',' << fixed(row.report->f1) << ','
          << fixed(row.report->accuracy) << ',' << fixed(row.report->mrr.value_or(0.0));
    } else {
      out << ",,,,";
    }
    std::string error = row.error;
    for (auto& c : error)
      if (c == ',' || c == '\n') c = ' ';
    out << ',' << row.triplets << ',' << fixed(row.log_likelihood) << ',' << error << '\n';
  }
  return out.str();
}

nlohmann::json sweep_json(std::span<const SweepRow> rows) {
  auto out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j = {{"k_topics", row.k_topics}, {"triplets", row.triplets}, {"log_likelihood", row.log_likelihood}};
    if (row.report) j["metrics"] = to_json(*row.report);
    else j["error"] = row.error;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace faqfuse
