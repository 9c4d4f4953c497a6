#include "faqfuse/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "faqfuse/error.hpp"

namespace faqfuse {

ScorerSpec ScorerSpec::parse(std::string_view spec) {
  ScorerSpec out;
  if (spec == "baseline") return out;
  constexpr std::string_view prefix = "remote:";
  if (spec.starts_with(prefix) && spec.size() > prefix.size()) {
    out.kind = Kind::kRemote;
    out.url = std::string(spec.substr(prefix.size()));
    return out;
  }
  throw Error("unknown scorer \"" + std::string(spec) + "\" (expected baseline or remote:URL)");
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  try {
    if (!j.is_object()) throw ParseError("config must be a JSON object", 0);
    if (j.value("version", 0) != 1) throw ParseError("config \"version\" must be 1", 0);
    PipelineConfig c;

    const auto task = j.value("task", std::string("faq"));
    if (task == "faq") c.task = Task::kFaq;
    else if (task == "match") c.task = Task::kMatch;
    else throw ParseError("config task must be faq or match", 0);

    const auto& corpus = j.at("corpus");
    c.corpus_path = resolve(base_dir, corpus.at("path").get<std::string>());
    read_if(corpus, "format", c.corpus_format);
    if (c.task == Task::kFaq && !parse_corpus_format(c.corpus_format))
      throw ParseError("corpus format must be jsonl or tsv", 0);

    if (j.contains("tokenizer")) {
      const auto mode = parse_tokenizer_mode(j["tokenizer"].get<std::string>());
      if (!mode) throw ParseError("unknown tokenizer mode", 0);
      c.tokenizer = *mode;
    }
    if (j.contains("bm25")) {
      read_if(j["bm25"], "k1", c.bm25.k1);
      read_if(j["bm25"], "b", c.bm25.b);
    }
    if (j.contains("plsa")) {
      const auto& p = j["plsa"];
      read_if(p, "enabled", c.plsa_enabled);
      read_if(p, "k_topics", c.plsa.k_topics);
      read_if(p, "max_iterations", c.plsa.max_iterations);
      read_if(p, "tolerance", c.plsa.tolerance);
      read_if(p, "seed", c.plsa.seed);
      read_if(p, "smoothing_epsilon", c.plsa.smoothing_epsilon);
      read_if(p, "top_l", c.top_l);
    }
    if (j.contains("knowledge")) {
      const auto& k = j["knowledge"];
      for (const auto& path : k.value("external", std::vector<std::string>{})) c.external_kb.push_back(resolve(base_dir, path));
      for (const auto& path : k.value("topical", std::vector<std::string>{})) c.topical_kb.push_back(resolve(base_dir, path));
    }
    if (j.contains("injection")) {
      read_if(j["injection"], "max_triplets_per_token", c.injection.max_triplets_per_token);
      read_if(j["injection"], "max_sequence_length", c.injection.max_sequence_length);
    }
    if (j.contains("scorer")) {
      const auto& s = j["scorer"];
      const auto kind = s.value("kind", std::string("baseline"));
      if (kind == "remote") {
        c.scorer.kind = ScorerSpec::Kind::kRemote;
        c.scorer.url = s.at("url").get<std::string>();
      } else if (kind != "baseline") {
        throw ParseError("scorer kind must be baseline or remote", 0);
      }
      if (s.contains("timeout_ms")) c.scorer.timeout = std::chrono::milliseconds(s["timeout_ms"].get<long long>());
    }
    if (j.contains("fusion")) {
      read_if(j["fusion"], "alpha", c.fusion.alpha);
      read_if(j["fusion"], "vote_m", c.fusion.vote_m);
      read_if(j["fusion"], "voting_enabled", c.fusion.voting_enabled);
    }
    if (j.contains("split")) {
      const auto& s = j["split"];
      if (s.contains("ratios")) {
        const auto r = s["ratios"].get<std::vector<double>>();
        if (r.size() != 3) throw ParseError("split ratios must have three entries", 0);
        c.split = {r[0], r[1], r[2]};
      }
      read_if(s, "seed", c.split_seed);
    }

    c.bm25.validate();
    c.plsa.validate();
    c.injection.validate();
    c.fusion.validate();
    if (c.top_l < 2) throw ParseError("plsa top_l must be at least 2", 0);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed config: ") + e.what(), 0);
  }
}

nlohmann::json serialize(const PipelineConfig& c) {
  auto paths = [](const std::vector<std::filesystem::path>& ps) {
    std::vector<std::string> out;
    for (const auto& p : ps) out.push_back(p.string());
    return out;
  };
  nlohmann::json scorer = {{"kind", c.scorer.kind == ScorerSpec::Kind::kRemote ? "remote" : "baseline"},
                           {"timeout_ms", c.scorer.timeout.count()}};
  if (c.scorer.kind == ScorerSpec::Kind::kRemote) scorer["url"] = c.scorer.url;
  return {
      {"version", 1},
      {"task", c.task == Task::kFaq ? "faq" : "match"},
      {"corpus", {{"path", c.corpus_path.string()}, {"format", c.corpus_format}}},
      {"tokenizer", to_string(c.tokenizer)},
      {"bm25", {{"k1", c.bm25.k1}, {"b", c.bm25.b}}},
      {"plsa",
       {{"enabled", c.plsa_enabled},
        {"k_topics", c.plsa.k_topics},
        {"max_iterations", c.plsa.max_iterations},
        {"tolerance", c.plsa.tolerance},
        {"seed", c.plsa.seed},
        {"smoothing_epsilon", c.plsa.smoothing_epsilon},
        {"top_l", c.top_l}}},
      {"knowledge", {{"external", paths(c.external_kb)}, {"topical", paths(c.topical_kb)}}},
      {"injection",
       {{"max_triplets_per_token", c.injection.max_triplets_per_token},
        {"max_sequence_length", c.injection.max_sequence_length}}},
      {"scorer", std::move(scorer)},
      {"fusion", {{"alpha", c.fusion.alpha}, {"vote_m", c.fusion.vote_m}, {"voting_enabled", c.fusion.voting_enabled}}},
      {"split", {{"ratios", {c.split.train, c.split.valid, c.split.test}}, {"seed", c.split_seed}}},
  };
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("config not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
  }
  auto config = parse_config(j, path.parent_path());
  auto require = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) throw Error(std::string(what) + " not found: " + p.string());
  };
  require(config.corpus_path, "corpus");
  for (const auto& p : config.external_kb) require(p, "knowledge base");
  for (const auto& p : config.topical_kb) require(p, "knowledge base");
  return config;
}

std::string fingerprint(const PipelineConfig& config) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (const unsigned char c : serialize(config).dump()) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::optional<SplitName> parse_split_name(std::string_view name) {
  if (name == "train") return SplitName::kTrain;
  if (name == "valid" || name == "validation") return SplitName::kValid;
  if (name == "test") return SplitName::kTest;
  return std::nullopt;
}

std::string_view to_string(SplitName split) {
  switch (split) {
    case SplitName::kTrain: return "train";
    case SplitName::kValid: return "valid";
    case SplitName::kTest: return "test";
  }
  return "unknown";
}

std::optional<KnowledgeBase> load_knowledge(const PipelineConfig& config) {
  if (config.external_kb.empty() && config.topical_kb.empty()) return std::nullopt;
  std::optional<KnowledgeBase> kb;
  auto add = [&kb](KnowledgeBase next) { kb = kb ? merge(*kb, next) : std::move(next); };
  for (const auto& p : config.external_kb) add(load_triplets(p));
  for (const auto& p : config.topical_kb) {
    auto topical = load_triplets(p);
    add(KnowledgeBase(topical.triplets(), KnowledgeSource::kTopical));
  }
  return kb;
}

std::shared_ptr<const RelevanceScorer> make_scorer(const ScorerSpec& spec, const Corpus& corpus) {
  if (spec.kind == ScorerSpec::Kind::kRemote)
    return std::make_shared<RemoteScorer>(spec.url, corpus.answers().size(), spec.timeout);
  return BaselineScorer::fit(corpus);
}

namespace {

std::shared_ptr<const Pipeline> matching_pipeline(const PipelineConfig& config, std::span<const QuestionPair> train) {
  if (train.empty()) throw Error("matching: empty training split");
  std::vector<std::vector<std::string>> questions;
  for (const auto& text : unique_questions(train)) questions.push_back(tokenize(text, config.tokenizer));
  auto index = Bm25Index::build(questions, config.tokenizer, config.bm25);
  std::shared_ptr<const RelevanceScorer> scorer;
  if (config.scorer.kind == ScorerSpec::Kind::kRemote)
    scorer = std::make_shared<RemoteScorer>(config.scorer.url, 0, config.scorer.timeout);
  else
    scorer = BaselineScorer::fit(std::move(questions), config.tokenizer);
  return std::make_shared<Pipeline>(std::nullopt, std::move(index), load_knowledge(config), std::move(scorer),
                                    config.fusion, config.injection);
}

std::shared_ptr<const Pipeline> faq_pipeline(const PipelineConfig& config, const Corpus& corpus) {
  auto kb = load_knowledge(config);
  if (config.plsa_enabled) {
    const auto model = train_plsa(corpus, config.plsa);
    auto topical = triplets_from_topics(model, std::min(config.top_l, model.vocabulary.size()));
    kb = kb ? merge(*kb, topical) : std::move(topical);
  }
  auto index = Bm25Index::build(corpus, config.bm25);
  auto scorer = make_scorer(config.scorer, corpus);
  return std::make_shared<Pipeline>(corpus, std::move(index), std::move(kb), std::move(scorer), config.fusion,
                                    config.injection);
}

}  // namespace

Experiment assemble_experiment(const PipelineConfig& config, SplitName split) {
  Experiment out;
  if (config.task == Task::kMatch) {
    const auto pairs = load_question_pairs(config.corpus_path);
    const auto parts = split_indices(pairs.size(), config.split, config.split_seed);
    auto pick = [&pairs](const std::vector<std::size_t>& indices) {
      std::vector<QuestionPair> selected;
      for (auto i : indices) selected.push_back(pairs[i]);
      return selected;
    };
    const auto train = pick(parts.train);
    out.pipeline = matching_pipeline(config, train);
    out.question_pairs = pick(split == SplitName::kTrain ? parts.train
                              : split == SplitName::kValid ? parts.valid
                                                           : parts.test);
    return out;
  }

  const auto corpus = load_corpus(config.corpus_path, *parse_corpus_format(config.corpus_format), config.tokenizer);
  auto parts = split_corpus(corpus, config.split, config.split_seed);
  out.pipeline = faq_pipeline(config, parts.train);
  const Corpus& held_out = split == SplitName::kTrain ? parts.train : split == SplitName::kValid ? parts.valid : parts.test;
  out.queries = eval_queries(parts.train, held_out);
  out.train = std::move(parts.train);
  return out;
}

std::shared_ptr<const Pipeline> assemble_pipeline(const PipelineConfig& config) {
  if (config.task == Task::kMatch) return matching_pipeline(config, load_question_pairs(config.corpus_path));
  return faq_pipeline(config,
                      load_corpus(config.corpus_path, *parse_corpus_format(config.corpus_format), config.tokenizer));
}

nlohmann::json run_evaluation(const PipelineConfig& config, SplitName split) {
  const auto experiment = assemble_experiment(config, split);
  nlohmann::json report = {{"task", config.task == Task::kFaq ? "faq" : "match"},
                           {"split", to_string(split)},
                           {"config_fingerprint", fingerprint(config)}};
  if (config.task == Task::kFaq) {
    if (experiment.queries.empty()) throw Error("evaluation split is empty");
    report["metrics"] = to_json(evaluate_retrieval(*experiment.pipeline, experiment.queries));
    report["collection_size"] = experiment.train.size();
    report["knowledge_triplets"] =
        experiment.pipeline->knowledge() ? experiment.pipeline->knowledge()->size() : std::size_t{0};
  } else {
    if (experiment.question_pairs.empty()) throw Error("evaluation split is empty");
    report["metrics"] = to_json(evaluate_matching(*experiment.pipeline, experiment.question_pairs));
    report["collection_size"] = experiment.pipeline->index().n_questions();
  }
  return report;
}

}  // namespace faqfuse
