#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faqfuse/bm25.hpp"
#include "faqfuse/corpus.hpp"
#include "faqfuse/eval.hpp"
#include "faqfuse/knowledge.hpp"
#include "faqfuse/plsa.hpp"
#include "faqfuse/rank.hpp"

namespace faqfuse {

enum class Task { kFaq, kMatch };

struct ScorerSpec {
  enum class Kind { kBaseline, kRemote } kind = Kind::kBaseline;
  std::string url;
  std::chrono::milliseconds timeout{10000};

  /// "baseline" or "remote:URL".
  static ScorerSpec parse(std::string_view spec);
  bool operator==(const ScorerSpec&) const = default;
};

/// Pipeline configuration file (JSON, "version": 1). Relative paths are
/// resolved against the directory of the file they were read from.
struct PipelineConfig {
  Task task = Task::kFaq;
  std::filesystem::path corpus_path;
  std::string corpus_format = "jsonl";  ///< jsonl | tsv; matching corpora are always question-pair TSV
  TokenizerMode tokenizer = TokenizerMode::kChar;
  Bm25Params bm25;
  bool plsa_enabled = false;  ///< train topical triplets in-process
  PlsaConfig plsa;
  std::size_t top_l = 10;
  std::vector<std::filesystem::path> external_kb;
  std::vector<std::filesystem::path> topical_kb;
  InjectionConfig injection;
  ScorerSpec scorer;
  FusionConfig fusion;
  SplitRatios split;
  std::uint64_t split_seed = 0;

  bool operator==(const PipelineConfig&) const = default;
};

PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json serialize(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the serialized configuration.
std::string fingerprint(const PipelineConfig& config);

enum class SplitName { kTrain, kValid, kTest };
std::optional<SplitName> parse_split_name(std::string_view name);
std::string_view to_string(SplitName split);

/// A pipeline assembled over the training split plus the held-out queries of
/// one split.
struct Experiment {
  std::shared_ptr<const Pipeline> pipeline;
  std::vector<EvalQuery> queries;             ///< faq task
  std::vector<QuestionPair> question_pairs;   ///< match task
  Corpus train;                               ///< faq task
};

Experiment assemble_experiment(const PipelineConfig& config, SplitName split);

/// Pipeline over the full collection, used by the service.
std::shared_ptr<const Pipeline> assemble_pipeline(const PipelineConfig& config);

/// Loads and merges every configured knowledge file; nullopt when none are configured.
std::optional<KnowledgeBase> load_knowledge(const PipelineConfig& config);

std::shared_ptr<const RelevanceScorer> make_scorer(const ScorerSpec& spec, const Corpus& corpus);

/// Evaluation report for one split: metrics, sizes and the config fingerprint.
nlohmann::json run_evaluation(const PipelineConfig& config, SplitName split);

}  // namespace faqfuse
