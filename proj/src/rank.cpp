#include "faqfuse/rank.hpp"

#include <algorithm>
#include <map>

#include "faqfuse/error.hpp"

namespace faqfuse {

void FusionConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("fusion: alpha must lie in [0, 1]");
  if (vote_m == 0) throw Error("fusion: vote_m must be positive");
}

std::vector<ScoredPair> fuse(std::span<const double> bm25_scores, std::span<const AnswerId> answer_of_pair,
                             const AnswerDistribution& relevance, double alpha) {
  if (bm25_scores.size() != answer_of_pair.size()) throw Error("fuse: one BM25 score per pair is required");
  double total = 0.0;
  for (double s : bm25_scores) total += s;

  std::vector<ScoredPair> out(bm25_scores.size());
  for (std::size_t n = 0; n < bm25_scores.size(); ++n) {
    auto& p = out[n];
    p.pair_index = n;
    p.answer_id = answer_of_pair[n];
    p.bm25_raw = bm25_scores[n];
    p.bm25_norm = total > 0.0 ? bm25_scores[n] / total : 0.0;
    p.relevance = relevance[p.answer_id];
    p.rs = alpha * p.bm25_norm + (1.0 - alpha) * p.relevance;
  }
  return out;
}

void sort_by_rs(std::vector<ScoredPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const ScoredPair& a, const ScoredPair& b) {
    return a.rs != b.rs ? a.rs > b.rs : a.pair_index < b.pair_index;
  });
}

std::optional<AnswerId> majority_answer(std::span<const ScoredPair> ranked, std::size_t m) {
  if (m == 0) throw Error("vote: m must be positive");
  const std::size_t threshold = (m + 1) / 2;
  const std::size_t depth = std::min(m, ranked.size());
  std::map<AnswerId, std::size_t> counts;
  for (std::size_t i = 0; i < depth; ++i) ++counts[ranked[i].answer_id];
  // Walking in rank order makes the first qualifying answer the best-ranked one.
  for (std::size_t i = 0; i < depth; ++i)
    if (counts[ranked[i].answer_id] >= threshold) return ranked[i].answer_id;
  return std::nullopt;
}

AnswerId vote(std::span<const ScoredPair> ranked, std::size_t m) {
  if (ranked.empty()) throw Error("vote: empty ranking");
  return majority_answer(ranked, m).value_or(ranked.front().answer_id);
}

Pipeline::Pipeline(std::optional<Corpus> corpus, Bm25Index index, std::optional<KnowledgeBase> kb,
                   std::shared_ptr<const RelevanceScorer> scorer, FusionConfig fusion, InjectionConfig injection)
    : corpus_(std::move(corpus)),
      index_(std::move(index)),
      kb_(std::move(kb)),
      scorer_(std::move(scorer)),
      fusion_(fusion),
      injection_(injection) {
  fusion_.validate();
  injection_.validate();
  if (!scorer_) throw Error("pipeline: a relevance scorer is required");
  if (corpus_) {
    if (corpus_->size() != index_.n_questions()) throw Error("pipeline: index and corpus sizes differ");
    if (scorer_->answer_count() != corpus_->answers().size())
      throw Error("pipeline: scorer answer set does not match the corpus");
    answer_of_pair_.reserve(corpus_->size());
    for (const auto& pair : corpus_->pairs()) answer_of_pair_.push_back(pair.answer_id);
  }
}

std::optional<InjectedSequence> Pipeline::injected(std::span<const std::string> tokens) const {
  if (!kb_ || tokens.empty()) return std::nullopt;
  return inject(tokens, *kb_, injection_);
}

RankedList Pipeline::retrieve(std::string_view query) const {
  if (!corpus_) throw Error("pipeline: retrieval requires a Q-A corpus");
  const auto tokens = tokenize(query, index_.tokenizer());
  const auto bm25 = index_.score_all(tokens);
  const auto sequence = injected(tokens);
  const auto relevance = scorer_->score_answers(query, sequence ? &*sequence : nullptr);

  RankedList list;
  list.entries = fuse(bm25, answer_of_pair_, relevance, fusion_.alpha);
  sort_by_rs(list.entries);
  list.chosen_answer = list.entries.front().answer_id;
  if (fusion_.voting_enabled) {
    if (const auto winner = majority_answer(list.entries, fusion_.vote_m)) {
      list.chosen_answer = *winner;
      list.vote_applied = true;
    }
  }
  return list;
}

MatchResult Pipeline::match(std::string_view left, std::string_view right) const {
  const auto left_tokens = tokenize(left, index_.tokenizer());
  const auto right_tokens = tokenize(right, index_.tokenizer());
  const auto left_injected = injected(left_tokens);
  const auto right_injected = injected(right_tokens);

  MatchResult out;
  out.bm25_raw = index_.score_against(left_tokens, right_tokens);
  // `right` is the whole one-question collection, so the quotient is 1 or 0.
  out.bm25_norm = out.bm25_raw > 0.0 ? 1.0 : 0.0;
  out.similarity = scorer_
                       ->score_pair(left, right, left_injected ? &*left_injected : nullptr,
                                    right_injected ? &*right_injected : nullptr)
                       .similarity;
  out.score = fusion_.alpha * out.bm25_norm + (1.0 - fusion_.alpha) * out.similarity;
  out.label = out.score >= 0.5 ? 1 : 0;
  return out;
}

}  // namespace faqfuse
