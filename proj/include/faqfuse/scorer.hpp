#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "faqfuse/corpus.hpp"
#include "faqfuse/error.hpp"
#include "faqfuse/knowledge.hpp"

namespace faqfuse {

/// P(A|q) over the distinct answers of a corpus, indexed by AnswerId.
struct AnswerDistribution {
  std::vector<double> probs;

  double operator[](AnswerId id) const { return probs.at(id); }
  std::size_t size() const { return probs.size(); }
  AnswerId argmax() const;
};

struct PairScore {
  double similarity = 0.0;
};

/// Supervised q-A relevance measure. Implementations are immutable after
/// construction and safe to call concurrently. `injected` carries the
/// knowledge-augmented query; backends may ignore it.
class RelevanceScorer {
 public:
  virtual ~RelevanceScorer() = default;

  virtual AnswerDistribution score_answers(std::string_view query, const InjectedSequence* injected) const = 0;
  virtual PairScore score_pair(std::string_view left, std::string_view right, const InjectedSequence* injected_left,
                               const InjectedSequence* injected_right) const = 0;
  virtual std::size_t answer_count() const = 0;
  virtual std::string name() const = 0;
};

/// Sparse TF-IDF vector keyed by token.
using TermVector = std::map<std::string, double, std::less<>>;

double cosine(const TermVector& a, const TermVector& b);

/// TF-IDF cosine baseline. idf(w) = ln((1 + D) / (1 + df(w))) + 1 over the D
/// fitted documents; score_answers is the softmax (temperature 1) of the
/// query-answer cosines.
class BaselineScorer final : public RelevanceScorer {
 public:
  /// Fits over the distinct answers of `corpus`.
  static std::shared_ptr<BaselineScorer> fit(const Corpus& corpus);
  /// Fits over arbitrary tokenized documents; each document is one answer class.
  static std::shared_ptr<BaselineScorer> fit(std::vector<std::vector<std::string>> documents, TokenizerMode mode);

  AnswerDistribution score_answers(std::string_view query, const InjectedSequence* injected) const override;
  PairScore score_pair(std::string_view left, std::string_view right, const InjectedSequence* injected_left,
                       const InjectedSequence* injected_right) const override;
  std::size_t answer_count() const override { return answer_vectors_.size(); }
  std::string name() const override { return "baseline-tfidf"; }

  double idf(std::string_view token) const;
  TermVector vectorize(std::span<const std::string> tokens) const;
  std::vector<double> cosines(std::string_view query) const;

 private:
  TokenizerMode mode_ = TokenizerMode::kChar;
  std::size_t n_documents_ = 0;
  std::map<std::string, std::size_t, std::less<>> document_frequency_;
  std::vector<TermVector> answer_vectors_;
};

std::vector<double> softmax(std::span<const double> logits);

/// Failure talking to a remote scorer.
class TransportError : public Error {
 public:
  enum class Kind { kTimeout, kUnreachable, kProtocol };

  TransportError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Client for the `/score` HTTP protocol. No retries.
class RemoteScorer final : public RelevanceScorer {
 public:
  RemoteScorer(std::string base_url, std::size_t answer_count,
               std::chrono::milliseconds timeout = std::chrono::seconds(10));

  AnswerDistribution score_answers(std::string_view query, const InjectedSequence* injected) const override;
  PairScore score_pair(std::string_view left, std::string_view right, const InjectedSequence* injected_left,
                       const InjectedSequence* injected_right) const override;
  std::size_t answer_count() const override { return answer_count_; }
  std::string name() const override { return "remote:" + base_url_; }

  /// GET /health; returns the reported model tag.
  std::string health() const;

 private:
  nlohmann::json post(const nlohmann::json& body) const;

  std::string base_url_;
  std::size_t answer_count_;
  std::chrono::milliseconds timeout_;
};

/// Decimal rendering used for answer ids on the wire.
std::string answer_key(AnswerId id);

/// Validates a `{"probs": {...}}` response against the expected answer count:
/// every id present, no extras, values in [0,1], sum within 1e-3 of 1. The
/// result is renormalized to sum to 1.
AnswerDistribution parse_probs_response(const nlohmann::json& response, std::size_t answer_count);

}  // namespace faqfuse
