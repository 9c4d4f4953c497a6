// Acceptance run: one PASS/FAIL/SKIP line per primary criterion. Exit status
// is nonzero iff some criterion failed (including by exceeding its time limit).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cli_harness.hpp"
#include "faqfuse/config.hpp"
#include "faqfuse/eval.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace faqfuse;

namespace {

struct Outcome {
  enum class Status { kPass, kFail, kSkip } status;
  std::string detail;
};

Outcome pass(std::string detail = {}) { return {Outcome::Status::kPass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Outcome::Status::kFail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Outcome::Status::kSkip, std::move(detail)}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)}); }

Corpus token_corpus(oracle::Fixtures& gen, std::size_t docs, std::size_t alphabet) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < docs; ++i) {
    std::string q, a;
    for (const auto& t : gen.tokens(3, 8, alphabet)) q += t + " ";
    for (const auto& t : gen.tokens(3, 10, alphabet)) a += t + " ";
    pairs.emplace_back(q, a);
  }
  return fixtures::corpus(pairs);
}

Outcome bm25_oracle() {
  oracle::Fixtures gen(100);
  const Bm25Params params;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<oracle::Tokens> questions(gen.uniform(1, 20));
    for (auto& q : questions) q = gen.tokens(1, 10, 12);
    const auto query = gen.tokens(1, 8, 14);
    const auto index = Bm25Index::build(questions, TokenizerMode::kUnicodeWord, params);
    std::vector<double> expected;
    for (std::size_t n = 0; n < questions.size(); ++n) {
      expected.push_back(oracle::bm25(questions, query, n, params.k1, params.b));
      if (!rel_close(index.score(query, n), expected.back(), 1e-10))
        return fail("trial " + std::to_string(trial) + " question " + std::to_string(n));
    }
    std::vector<std::size_t> order(questions.size());
    std::iota(order.begin(), order.end(), 0);
    const auto scores = index.score_all(query);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    const auto ranked = index.rank(query, questions.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      if (ranked[i].question != order[i]) return fail("rank order differs in trial " + std::to_string(trial));
  }
  return pass("100 fixtures");
}

Outcome plsa_monotonicity() {
  oracle::Fixtures gen(50);
  const auto corpus = token_corpus(gen, 50, 30);
  double worst_drop = 0;
  std::size_t steps = 0;
  for (std::size_t k : {1, 2, 5, 10})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto model = train_plsa(corpus, {.k_topics = k, .seed = seed});
      const auto& trace = model.log_likelihood_trace;
      steps += trace.size() - 1;
      for (std::size_t i = 1; i < trace.size(); ++i) worst_drop = std::max(worst_drop, trace[i - 1] - trace[i]);
      if (worst_drop > 1e-9) return fail("log-likelihood dropped by " + fmt("%.3g", worst_drop));
    }

  const auto unigram = train_plsa(corpus, {.k_topics = 1, .seed = 0});
  const auto& vocab = corpus.vocabulary();
  double total = 0;
  for (std::size_t w = 0; w < vocab.size(); ++w) total += static_cast<double>(vocab.frequency(w));
  double linf = 0;
  for (std::size_t w = 0; w < vocab.size(); ++w)
    linf = std::max(linf, std::abs(unigram.word_given_topic(0, w) - static_cast<double>(vocab.frequency(w)) / total));
  if (linf > 1e-8) return fail("K=1 unigram L-inf " + fmt("%.3g", linf));
  return pass(std::to_string(steps) + " EM steps, max drop " + fmt("%.3g", worst_drop) + ", K=1 L-inf " + fmt("%.3g", linf));
}

Outcome triplet_count() {
  oracle::Fixtures gen(3);
  const auto corpus = token_corpus(gen, 30, 25);
  for (std::size_t k : {1, 3, 10}) {
    const auto model = train_plsa(corpus, {.k_topics = k, .max_iterations = 10, .seed = 1});
    for (std::size_t l : {2, 3, 10}) {
      const auto got = triplets_from_topics(model, l).size();
      if (got != k * l * (l - 1))
        return fail("K=" + std::to_string(k) + " L=" + std::to_string(l) + " gave " + std::to_string(got));
    }
  }
  return pass("K=10, L=10 -> 900");
}

Outcome injection_rules() {
  using Tokens = std::vector<std::string>;
  const InjectionConfig config;
  const KnowledgeBase one({{"w2", "r", "t"}}, KnowledgeSource::kExternal);
  const auto s = inject(Tokens{"w1", "w2"}, one, config);
  const std::vector<std::uint8_t> expected_visible{1, 1, 0, 0,  //
                                                   1, 1, 1, 1,  //
                                                   0, 1, 1, 1,  //
                                                   0, 1, 1, 1};
  if (s.tokens != Tokens{"w1", "w2", "r", "t"}) return fail("hand example tokens");
  if (s.soft_positions != std::vector<std::size_t>{0, 1, 2, 3}) return fail("hand example soft positions");
  if (s.visible != expected_visible) return fail("hand example visibility");

  oracle::Fixtures gen(200);
  for (int trial = 0; trial < 200; ++trial) {
    const auto query = gen.tokens(1, 12, 10);
    if (inject(query, KnowledgeBase{}, config).tokens != query) return fail("empty knowledge base changed the query");
    std::set<Triplet> triplets;
    for (std::size_t i = gen.uniform(0, 15); i > 0; --i) triplets.insert({gen.word(10), "r" + gen.word(3), gen.word(30)});
    const auto r = inject(query, KnowledgeBase(triplets, KnowledgeSource::kExternal),
                          {.max_triplets_per_token = gen.uniform(1, 3), .max_sequence_length = gen.uniform(1, 40)});
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!r.is_visible(i, i)) return fail("diagonal not visible");
      for (std::size_t j = 0; j < r.size(); ++j)
        if (r.is_visible(i, j) != r.is_visible(j, i)) return fail("visible matrix not symmetric");
    }
  }
  return pass("hand example + 200 randomized");
}

std::size_t argmax_rs(std::vector<ScoredPair> pairs) {
  sort_by_rs(pairs);
  return pairs.front().pair_index;
}

Outcome fusion_and_voting() {
  const std::vector<AnswerId> ids{0, 1, 2};
  const auto hand = fuse(std::vector<double>{0.5, 0.3, 0.2}, ids, AnswerDistribution{{0.2, 0.7, 0.1}}, 0.4);
  const double want[] = {0.32, 0.54, 0.14};
  for (std::size_t i = 0; i < 3; ++i)
    if (std::abs(hand[i].rs - want[i]) > 1e-12) return fail("hand example rs[" + std::to_string(i) + "]");

  oracle::Fixtures gen(52);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = gen.uniform(2, 10);
    std::vector<double> bm25(n);
    std::vector<AnswerId> answers(n);
    for (std::size_t i = 0; i < n; ++i) {
      bm25[i] = gen.real(0.0, 5.0);
      answers[i] = i;
    }
    AnswerDistribution rel{std::vector<double>(n)};
    double sum = 0;
    for (auto& p : rel.probs) sum += (p = gen.real(0.01, 1.0));
    for (auto& p : rel.probs) p /= sum;

    const auto bm25_best = static_cast<std::size_t>(std::max_element(bm25.begin(), bm25.end()) - bm25.begin());
    const auto rel_best = static_cast<std::size_t>(std::max_element(rel.probs.begin(), rel.probs.end()) - rel.probs.begin());
    if (argmax_rs(fuse(bm25, answers, rel, 1.0)) != bm25_best) return fail("alpha=1 is not BM25 argmax");
    if (argmax_rs(fuse(bm25, answers, rel, 0.0)) != rel_best) return fail("alpha=0 is not relevance argmax");

    const double c = std::exp(gen.real(-20.0, 20.0));
    auto scaled = bm25;
    for (auto& v : scaled) v *= c;
    const double alpha = gen.real(0.0, 1.0);
    if (argmax_rs(fuse(bm25, answers, rel, alpha)) != argmax_rs(fuse(scaled, answers, rel, alpha)))
      return fail("argmax changed under scaling by " + fmt("%.3g", c));
  }

  auto slate = [](std::vector<AnswerId> a) {
    std::vector<ScoredPair> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back({.pair_index = i, .answer_id = a[i], .rs = 1.0 - 0.1 * i});
    return out;
  };
  enum : AnswerId { A, B, C, D, E };
  if (vote(slate({A, A, B, A, C}), 5) != A) return fail("[A,A,B,A,C]");
  if (vote(slate({A, B, C, D, E}), 5) != A) return fail("[A,B,C,D,E]");
  return pass("hand example, degeneracies, 50 scalings, voting");
}

RetrievalResult ranked(std::string gold, std::vector<std::string> ids) {
  RetrievalResult r;
  r.gold_answer_id = std::move(gold);
  r.chosen_answer_id = ids.front();
  r.ranked_answer_ids = std::move(ids);
  return r;
}

Outcome metrics_oracles() {
  const std::vector<RetrievalResult> mrr_case{ranked("a", {"a"}), ranked("a", {"b", "a"}), ranked("a", {"b", "c", "d", "a"})};
  const double m = mrr(mrr_case);
  if (std::abs(m - 0.583333333333) > 1e-9) return fail("MRR " + fmt("%.12f", m));
  const std::vector<RetrievalResult> confusion{ranked("A", {"A"}), ranked("A", {"A"}), ranked("B", {"A"}),
                                               ranked("B", {"A"})};
  const auto c = classification_metrics(confusion);
  if (std::abs(c.accuracy - 0.5) > 1e-6 || std::abs(c.precision - 0.25) > 1e-6 || std::abs(c.recall - 0.5) > 1e-6 ||
      std::abs(c.f1 - 0.3333333) > 1e-6)
    return fail("confusion example P=" + fmt("%.6f", c.precision) + " R=" + fmt("%.6f", c.recall) +
                " F1=" + fmt("%.6f", c.f1));
  return pass("MRR " + fmt("%.6f", m) + ", F1 " + fmt("%.6f", c.f1));
}

Outcome self_retrieval() {
  const auto corpus = fixtures::synthetic(200);
  const Pipeline pipeline(corpus, Bm25Index::build(corpus, {}), std::nullopt, BaselineScorer::fit(corpus),
                          {.alpha = 1.0, .vote_m = 5, .voting_enabled = false});
  const auto report = evaluate_retrieval(pipeline, eval_queries(corpus, corpus));
  if (report.accuracy != 1.0) return fail("accuracy " + fmt("%.4f", report.accuracy));
  return pass("accuracy 1.0 over 200 questions");
}

Outcome taipeiqa() {
  const char* path = std::getenv("FAQFUSE_TAIPEIQA");
  if (!path || !*path) return skip("set FAQFUSE_TAIPEIQA to a local TaipeiQA jsonl/tsv export to run");
  PipelineConfig config;
  config.corpus_path = path;
  config.corpus_format = config.corpus_path.extension() == ".tsv" ? "tsv" : "jsonl";
  config.tokenizer = TokenizerMode::kChar;
  config.fusion = {.alpha = 1.0, .vote_m = 5, .voting_enabled = false};
  const auto report = run_evaluation(config, SplitName::kTest);
  const double accuracy = report["metrics"]["accuracy"].get<double>();
  const auto detail = "test accuracy " + fmt("%.4f", accuracy) + " (target 0.743 +- 0.05)";
  return std::abs(accuracy - 0.743) <= 0.05 ? pass(detail) : fail(detail);
}

Outcome cli_determinism() {
  fixtures::TempDir dir;
  std::string jsonl;
  const auto corpus = fixtures::synthetic(80);
  for (const auto& pair : corpus.pairs())
    jsonl += nlohmann::json{{"id", pair.id}, {"question", pair.question}, {"answer", pair.answer}}.dump() + "\n";
  dir.write("faq.jsonl", jsonl);
  dir.write("config.json", R"({"version": 1, "corpus": {"path": "faq.jsonl"}, "tokenizer": "unicode-word",
                               "knowledge": {"topical": ["topical.tsv"]}, "split": {"seed": 9}})");
  const auto q = [&](const char* name) { return cli::quote(dir.path() / name); };
  std::vector<std::string> reports;
  for (int round = 0; round < 2; ++round) {
    for (const auto& args : {
             "index --corpus " + q("faq.jsonl") + " --tokenizer unicode-word --out " + q("index.json"),
             "train-plsa --corpus " + q("faq.jsonl") + " --tokenizer unicode-word --topics 5 --seed 4 --out " +
                 q("model.json"),
             "extract-triplets --model " + q("model.json") + " --top-l 5 --out " + q("topical.tsv"),
             "eval --pipeline-config " + q("config.json") + " --split test --out " + q("report.json"),
         }) {
      const auto r = cli::run(args, dir.path());
      if (r.exit_code != 0) return fail("`faqfuse " + args.substr(0, args.find(' ')) + "` exited " +
                                        std::to_string(r.exit_code) + ": " + r.err);
    }
    reports.push_back(cli::slurp(dir.path() / "report.json"));
  }
  if (reports[0].empty() || reports[0] != reports[1]) return fail("reports differ between runs");
  return pass("report " + std::to_string(reports[0].size()) + " bytes, identical");
}

struct Criterion {
  const char* name;
  double limit_seconds;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"bm25-oracle-equivalence", 5, bm25_oracle},
      {"plsa-em-monotonicity", 60, plsa_monotonicity},
      {"triplet-count-law", 1, triplet_count},
      {"injection-rules", 5, injection_rules},
      {"fusion-and-voting", 5, fusion_and_voting},
      {"metrics-oracles", 1, metrics_oracles},
      {"self-retrieval", 10, self_retrieval},
      {"taipeiqa-lexical-check", 300, taipeiqa},
      {"end-to-end-determinism", 120, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = fail(std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outcome.status == Outcome::Status::kPass && seconds > c.limit_seconds) outcome = fail("too slow");
    const char* label = outcome.status == Outcome::Status::kPass   ? "PASS"
                        : outcome.status == Outcome::Status::kFail ? "FAIL"
                                                                   : "SKIP";
    if (outcome.status == Outcome::Status::kFail) ++failures;
    std::printf("%s %-26s %8.3fs (limit %gs) %s\n", label, c.name, seconds, c.limit_seconds, outcome.detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
