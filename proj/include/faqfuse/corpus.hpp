#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "faqfuse/text.hpp"

namespace faqfuse {

using AnswerId = std::size_t;

struct QAPair {
  std::string id;
  std::string question;
  std::string answer;
  std::vector<std::string> question_tokens;
  AnswerId answer_id = 0;

  bool operator==(const QAPair&) const = default;
};

struct Answer {
  std::string text;  // NFC
  std::vector<std::string> tokens;

  bool operator==(const Answer&) const = default;
};

/// Token table. Ids are assigned in order of first occurrence.
class Vocabulary {
 public:
  std::size_t add(std::string_view token, std::size_t count = 1);
  std::optional<std::size_t> find(std::string_view token) const;

  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t frequency(std::size_t id) const { return frequencies_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary&) const = default;

 private:
  std::map<std::string, std::size_t, std::less<>> ids_;
  std::vector<std::string> tokens_;
  std::vector<std::size_t> frequencies_;
};

/// Raw (untokenized) record as read from disk.
struct QARecord {
  std::string id;
  std::string question;
  std::string answer;
};

/// An immutable Q-A collection. Answers are deduplicated by NFC string equality.
class Corpus {
 public:
  Corpus() = default;

  /// Throws ParseError on duplicate ids or empty (after trimming) fields;
  /// the reported line is the 1-based record position.
  static Corpus from_records(const std::vector<QARecord>& records, TokenizerMode mode);

  TokenizerMode tokenizer() const { return mode_; }
  const std::vector<QAPair>& pairs() const { return pairs_; }
  const std::vector<Answer>& answers() const { return answers_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  std::optional<AnswerId> find_answer(std::string_view text) const;

  /// Question tokens followed by answer tokens of pair n.
  std::vector<std::string> document_tokens(std::size_t n) const;

  std::vector<QARecord> records() const;
  Corpus subset(const std::vector<std::size_t>& pair_indices) const;

  bool operator==(const Corpus&) const = default;

 private:
  TokenizerMode mode_ = TokenizerMode::kChar;
  std::vector<QAPair> pairs_;
  std::vector<Answer> answers_;
  Vocabulary vocabulary_;
};

struct QuestionPair {
  std::string left;
  std::string right;
  int label = 0;

  bool operator==(const QuestionPair&) const = default;
};

enum class CorpusFormat { kJsonl, kTsv };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name);
std::string_view to_string(CorpusFormat format);

std::vector<QARecord> read_records(std::istream& in, CorpusFormat format);
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, TokenizerMode mode);

void write_jsonl(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

std::vector<QuestionPair> read_question_pairs(std::istream& in);
std::vector<QuestionPair> load_question_pairs(const std::filesystem::path& path);

/// Distinct (NFC, trimmed) questions from both sides, in first-occurrence order.
std::vector<std::string> unique_questions(std::span<const QuestionPair> pairs);

struct SplitRatios {
  double train = 0.68;
  double valid = 0.20;
  double test = 0.12;

  bool operator==(const SplitRatios&) const = default;
};

struct CorpusSplit {
  Corpus train;
  Corpus valid;
  Corpus test;
};

/// Index-level partition: sizes are floor(r*N) for valid and test, the rest is train.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

SplitIndices split_indices(std::size_t n, const SplitRatios& ratios, std::uint64_t seed);
CorpusSplit split_corpus(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed);

/// Portable Fisher-Yates permutation of 0..n-1 (independent of the standard
/// library's distribution implementations).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

nlohmann::json to_json(const Corpus& corpus);
Corpus corpus_from_json(const nlohmann::json& j);

}  // namespace faqfuse
