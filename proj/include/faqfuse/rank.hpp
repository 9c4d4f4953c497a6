#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faqfuse/bm25.hpp"
#include "faqfuse/corpus.hpp"
#include "faqfuse/knowledge.hpp"
#include "faqfuse/scorer.hpp"

namespace faqfuse {

struct FusionConfig {
  double alpha = 0.5;
  std::size_t vote_m = 5;
  bool voting_enabled = true;

  void validate() const;
  bool operator==(const FusionConfig&) const = default;
};

struct ScoredPair {
  std::size_t pair_index = 0;
  AnswerId answer_id = 0;
  double bm25_raw = 0.0;
  double bm25_norm = 0.0;
  double relevance = 0.0;
  double rs = 0.0;

  bool operator==(const ScoredPair&) const = default;
};

struct RankedList {
  std::vector<ScoredPair> entries;  ///< rs descending, ties by ascending pair_index
  AnswerId chosen_answer = 0;
  bool vote_applied = false;

  bool operator==(const RankedList&) const = default;
};

/// rs_n = alpha * bm25_n / sum(bm25) + (1 - alpha) * P(answer_of_pair[n] | q).
/// When the BM25 sum is zero every normalized term is 0. Output is in pair order.
std::vector<ScoredPair> fuse(std::span<const double> bm25_scores, std::span<const AnswerId> answer_of_pair,
                             const AnswerDistribution& relevance, double alpha);

/// Sorts by rs descending, ties by ascending pair_index.
void sort_by_rs(std::vector<ScoredPair>& pairs);

/// The answer occurring at least ceil(m/2) times among the first min(m, size)
/// entries, if any. Among several, the one ranked highest wins.
std::optional<AnswerId> majority_answer(std::span<const ScoredPair> ranked, std::size_t m);

/// majority_answer, falling back to the top entry's answer.
AnswerId vote(std::span<const ScoredPair> ranked, std::size_t m);

struct MatchResult {
  double score = 0.0;
  int label = 0;
  double bm25_raw = 0.0;
  double bm25_norm = 0.0;
  double similarity = 0.0;
};

/// Index, optional knowledge base and scorer assembled over one collection.
/// Immutable; retrieve and match may be called concurrently.
class Pipeline {
 public:
  /// `corpus` is required for retrieve(); match() needs only the index.
  Pipeline(std::optional<Corpus> corpus, Bm25Index index, std::optional<KnowledgeBase> kb,
           std::shared_ptr<const RelevanceScorer> scorer, FusionConfig fusion, InjectionConfig injection = {});

  RankedList retrieve(std::string_view query) const;
  MatchResult match(std::string_view left, std::string_view right) const;

  /// Injected query sequence, or nullopt when no knowledge base is configured
  /// or the query has no tokens.
  std::optional<InjectedSequence> injected(std::span<const std::string> tokens) const;

  const std::optional<Corpus>& corpus() const { return corpus_; }
  const Bm25Index& index() const { return index_; }
  const std::optional<KnowledgeBase>& knowledge() const { return kb_; }
  const RelevanceScorer& scorer() const { return *scorer_; }
  const FusionConfig& fusion() const { return fusion_; }
  const InjectionConfig& injection() const { return injection_; }

 private:
  std::optional<Corpus> corpus_;
  Bm25Index index_;
  std::optional<KnowledgeBase> kb_;
  std::shared_ptr<const RelevanceScorer> scorer_;
  FusionConfig fusion_;
  InjectionConfig injection_;
  std::vector<AnswerId> answer_of_pair_;
};

}  // namespace faqfuse
