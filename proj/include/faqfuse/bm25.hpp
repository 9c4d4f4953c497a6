#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "faqfuse/corpus.hpp"
#include "faqfuse/text.hpp"

namespace faqfuse {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;
  bool operator==(const Bm25Params&) const = default;
};

struct Posting {
  std::uint32_t question;
  std::uint32_t frequency;

  bool operator==(const Posting&) const = default;
};

struct RankedQuestion {
  std::size_t question;
  double score;

  bool operator==(const RankedQuestion&) const = default;
};

/// Inverted index over the question side of a collection, scoring with
/// Okapi BM25. IQF(w) = ln(1 + (N - n_w + 0.5) / (n_w + 0.5)), which is
/// non-negative for every n_w in [0, N].
class Bm25Index {
 public:
  inline static constexpr std::string_view kFormat = "faqfuse-bm25-v1";

  Bm25Index() = default;

  static Bm25Index build(const Corpus& corpus, const Bm25Params& params);
  static Bm25Index build(std::span<const std::vector<std::string>> questions, TokenizerMode mode,
                         const Bm25Params& params);

  /// Sum over query positions; out-of-vocabulary tokens contribute 0.
  double score(std::span<const std::string> query, std::size_t question) const;

  /// score() for every question, accumulated through the postings lists.
  std::vector<double> score_all(std::span<const std::string> query) const;

  /// Descending by score, ties by ascending question index; length min(top_k, N).
  std::vector<RankedQuestion> rank(std::span<const std::string> query, std::size_t top_k) const;

  /// BM25 of `query` against `target` treated as a one-question collection
  /// (avg_len = len(target)), with IQF taken from this index.
  double score_against(std::span<const std::string> query, std::span<const std::string> target) const;

  /// IQF of any token; tokens absent from the index use n_w = 0.
  double iqf(std::string_view token) const;
  std::size_t question_frequency(std::string_view token) const;

  const Bm25Params& params() const { return params_; }
  TokenizerMode tokenizer() const { return mode_; }
  std::size_t n_questions() const { return question_lengths_.size(); }
  double avg_len() const { return avg_len_; }
  const std::vector<std::uint32_t>& question_lengths() const { return question_lengths_; }
  const std::map<std::string, std::vector<Posting>, std::less<>>& postings() const { return postings_; }
  const std::map<std::string, double, std::less<>>& iqf_table() const { return iqf_; }

  bool operator==(const Bm25Index&) const = default;

  nlohmann::json to_json() const;
  static Bm25Index from_json(const nlohmann::json& j);

 private:
  double term_weight(double frequency, double length, double avg_len, double iqf) const;

  Bm25Params params_;
  TokenizerMode mode_ = TokenizerMode::kChar;
  std::vector<std::uint32_t> question_lengths_;
  double avg_len_ = 0.0;
  std::map<std::string, std::vector<Posting>, std::less<>> postings_;
  std::map<std::string, double, std::less<>> iqf_;
};

/// Index file contents. The corpus is present for FAQ collections and absent
/// for indexes built over bare question lists (matching mode).
struct IndexSnapshot {
  Bm25Index index;
  std::optional<Corpus> corpus;
  std::vector<std::string> questions;  ///< raw texts when built without a corpus
};

void write_index(std::ostream& out, const IndexSnapshot& snapshot);
IndexSnapshot read_index(std::istream& in);
void save_index(const std::filesystem::path& path, const IndexSnapshot& snapshot);
IndexSnapshot load_index(const std::filesystem::path& path);

}  // namespace faqfuse
