// Command-line front end: index, train-plsa, extract-triplets, query, match,
// eval, sweep, serve.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "faqfuse/bm25.hpp"
#include "faqfuse/config.hpp"
#include "faqfuse/corpus.hpp"
#include "faqfuse/error.hpp"
#include "faqfuse/eval.hpp"
#include "faqfuse/knowledge.hpp"
#include "faqfuse/plsa.hpp"
#include "faqfuse/rank.hpp"
#include "faqfuse/scorer.hpp"
#include "faqfuse/service.hpp"

namespace {

using namespace faqfuse;

TokenizerMode tokenizer_or_throw(const std::string& name) {
  const auto mode = parse_tokenizer_mode(name);
  if (!mode) throw Error("unknown tokenizer \"" + name + "\" (expected char or unicode-word)");
  return *mode;
}

CorpusFormat format_or_throw(const std::string& name) {
  const auto format = parse_corpus_format(name);
  if (!format) throw Error("unknown corpus format \"" + name + "\" (expected jsonl or tsv)");
  return *format;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string config_path_or_env(const std::string& given) {
  if (!given.empty()) return given;
  if (const char* env = std::getenv("FAQFUSE_CONFIG")) return env;
  throw Error("no pipeline config given (use --pipeline-config or FAQFUSE_CONFIG)");
}

struct PipelineOptions {
  std::string index_path;
  std::string model_path;
  std::size_t top_l = 10;
  std::vector<std::string> kb_paths;
  double alpha = 0.5;
  std::size_t vote_m = 5;
  bool no_vote = false;
  std::string scorer = "baseline";
  long long timeout_ms = 10000;
  std::size_t max_triplets = 2;
  std::size_t max_length = 128;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--index", index_path, "Index snapshot file")->required();
    cmd.add_option("--model", model_path, "PLSA model; its top words become topical triplets");
    cmd.add_option("--top-l", top_l, "Top words per topic when --model is given")->capture_default_str();
    cmd.add_option("--kb", kb_paths, "Triplet TSV file(s)");
    cmd.add_option("--alpha", alpha, "Weight of the normalized BM25 term")->capture_default_str();
    cmd.add_option("--vote", vote_m, "Voting depth M")->capture_default_str();
    cmd.add_flag("--no-vote", no_vote, "Disable voting");
    cmd.add_option("--scorer", scorer, "baseline | remote:URL")->capture_default_str();
    cmd.add_option("--timeout-ms", timeout_ms, "Remote scorer timeout")->capture_default_str();
    cmd.add_option("--max-triplets", max_triplets, "Branches per query token")->capture_default_str();
    cmd.add_option("--max-length", max_length, "Injected sequence budget")->capture_default_str();
  }

  std::shared_ptr<const Pipeline> build() const {
    auto snapshot = load_index(index_path);

    std::optional<KnowledgeBase> kb;
    auto add = [&kb](KnowledgeBase next) { kb = kb ? merge(*kb, next) : std::move(next); };
    for (const auto& p : kb_paths) add(load_triplets(p));
    if (!model_path.empty()) {
      const auto model = load_topic_model(model_path);
      add(triplets_from_topics(model, std::min(top_l, model.vocabulary.size())));
    }

    auto spec = ScorerSpec::parse(scorer);
    spec.timeout = std::chrono::milliseconds(timeout_ms);
    std::shared_ptr<const RelevanceScorer> relevance;
    if (snapshot.corpus) {
      relevance = make_scorer(spec, *snapshot.corpus);
    } else if (spec.kind == ScorerSpec::Kind::kRemote) {
      relevance = std::make_shared<RemoteScorer>(spec.url, 0, spec.timeout);
    } else {
      std::vector<std::vector<std::string>> docs;
      for (const auto& q : snapshot.questions) docs.push_back(tokenize(q, snapshot.index.tokenizer()));
      relevance = BaselineScorer::fit(std::move(docs), snapshot.index.tokenizer());
    }
    FusionConfig fusion{alpha, vote_m, !no_vote};
    InjectionConfig injection{max_triplets, max_length};
    return std::make_shared<Pipeline>(std::move(snapshot.corpus), std::move(snapshot.index), std::move(kb),
                                      std::move(relevance), fusion, injection);
  }
};

std::vector<std::size_t> parse_topic_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const auto value = std::stoul(item, &used);
      if (used != item.size() || value == 0) throw std::invalid_argument(item);
      out.push_back(value);
    } catch (const std::logic_error&) {
      throw Error("invalid topic count \"" + item + "\"");
    }
  }
  if (out.empty()) throw Error("--topics needs at least one value");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"faqfuse: FAQ retrieval and question matching with BM25, relevance fusion and knowledge injection"};
  app.require_subcommand(1);

  // index
  auto* index_cmd = app.add_subcommand("index", "Build a BM25 index snapshot");
  std::string corpus_path, out_path, format = "jsonl", tokenizer = "char";
  Bm25Params bm25;
  index_cmd->add_option("--corpus", corpus_path, "Corpus file")->required();
  index_cmd->add_option("--format", format, "jsonl | tsv | pairs (question-pair TSV)")->capture_default_str();
  index_cmd->add_option("--out", out_path, "Output snapshot")->required();
  index_cmd->add_option("--k1", bm25.k1, "BM25 k1")->capture_default_str();
  index_cmd->add_option("--b", bm25.b, "BM25 b")->capture_default_str();
  index_cmd->add_option("--tokenizer", tokenizer, "char | unicode-word")->capture_default_str();

  // train-plsa
  auto* plsa_cmd = app.add_subcommand("train-plsa", "Train a PLSA topic model");
  PlsaConfig plsa;
  plsa_cmd->add_option("--corpus", corpus_path, "Corpus file")->required();
  plsa_cmd->add_option("--format", format, "jsonl | tsv")->capture_default_str();
  plsa_cmd->add_option("--tokenizer", tokenizer, "char | unicode-word")->capture_default_str();
  plsa_cmd->add_option("--topics", plsa.k_topics, "Number of topics K")->capture_default_str();
  plsa_cmd->add_option("--iters", plsa.max_iterations, "Maximum EM iterations")->capture_default_str();
  plsa_cmd->add_option("--tolerance", plsa.tolerance, "Relative log-likelihood stopping threshold")->capture_default_str();
  plsa_cmd->add_option("--seed", plsa.seed, "Initialization seed")->capture_default_str();
  plsa_cmd->add_option("--out", out_path, "Output model JSON")->required();

  // extract-triplets
  auto* triplets_cmd = app.add_subcommand("extract-triplets", "Write topical triplets from a PLSA model");
  std::string model_path;
  std::size_t top_l = 10;
  triplets_cmd->add_option("--model", model_path, "PLSA model JSON")->required();
  triplets_cmd->add_option("--top-l", top_l, "Top words per topic")->capture_default_str();
  triplets_cmd->add_option("--out", out_path, "Output triplet TSV")->required();

  // query
  auto* query_cmd = app.add_subcommand("query", "Retrieve answers for one query");
  PipelineOptions query_opts;
  std::string query_text;
  std::size_t top_k = 5;
  query_opts.add_to(*query_cmd);
  query_cmd->add_option("--top-k", top_k, "Entries to print")->capture_default_str();
  query_cmd->add_option("text", query_text, "Query text")->required();

  // match
  auto* match_cmd = app.add_subcommand("match", "Score question pairs");
  PipelineOptions match_opts;
  std::string pairs_path, left, right;
  match_opts.add_to(*match_cmd);
  match_cmd->add_option("--pairs", pairs_path, "Question-pair TSV to score and evaluate");
  match_cmd->add_option("left", left, "Left question");
  match_cmd->add_option("right", right, "Right question");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a pipeline configuration on a split");
  std::string config_path, split = "test";
  eval_cmd->add_option("--pipeline-config", config_path, "Pipeline config JSON (default: $FAQFUSE_CONFIG)");
  eval_cmd->add_option("--split", split, "train | valid | test")->capture_default_str();
  eval_cmd->add_option("--out", out_path, "Report JSON (default: stdout)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate across PLSA topic counts");
  std::string topics = "1,5,10,15,20,25", sweep_split = "valid";
  sweep_cmd->add_option("--pipeline-config", config_path, "Pipeline config JSON (default: $FAQFUSE_CONFIG)");
  sweep_cmd->add_option("--topics", topics, "Comma-separated topic counts")->capture_default_str();
  sweep_cmd->add_option("--split", sweep_split, "train | valid | test")->capture_default_str();
  sweep_cmd->add_option("--out", out_path, "Output table (.json for JSON, CSV otherwise; default: stdout)");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP retrieval service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--config,--pipeline-config", config_path, "Pipeline config JSON (default: $FAQFUSE_CONFIG)");
  serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "Bind port")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (index_cmd->parsed()) {
      const auto mode = tokenizer_or_throw(tokenizer);
      IndexSnapshot snapshot;
      if (format == "pairs") {
        snapshot.questions = unique_questions(load_question_pairs(corpus_path));
        std::vector<std::vector<std::string>> tokens;
        for (const auto& q : snapshot.questions) tokens.push_back(tokenize(q, mode));
        snapshot.index = Bm25Index::build(tokens, mode, bm25);
      } else {
        auto corpus = load_corpus(corpus_path, format_or_throw(format), mode);
        snapshot.index = Bm25Index::build(corpus, bm25);
        snapshot.corpus = std::move(corpus);
      }
      save_index(out_path, snapshot);
      std::cerr << "indexed " << snapshot.index.n_questions() << " questions, " << snapshot.index.postings().size()
                << " terms\n";
    } else if (plsa_cmd->parsed()) {
      const auto corpus = load_corpus(corpus_path, format_or_throw(format), tokenizer_or_throw(tokenizer));
      const auto model = train_plsa(corpus, plsa);
      save_topic_model(out_path, model);
      std::cerr << "trained K=" << model.k_topics() << " in " << model.log_likelihood_trace.size() - 1
                << " iterations, log-likelihood " << model.final_log_likelihood << '\n';
    } else if (triplets_cmd->parsed()) {
      const auto model = load_topic_model(model_path);
      const auto kb = triplets_from_topics(model, top_l);
      save_triplets(out_path, kb);
      std::cerr << "wrote " << kb.size() << " triplets\n";
    } else if (query_cmd->parsed()) {
      const auto pipeline = query_opts.build();
      if (!pipeline->corpus()) throw Error("index has no Q-A corpus; use match for question-pair indexes");
      const auto ranked = pipeline->retrieve(query_text);
      std::cout << ranked_list_json(ranked, *pipeline->corpus(), top_k).dump(2) << '\n';
    } else if (match_cmd->parsed()) {
      const auto pipeline = match_opts.build();
      if (!pairs_path.empty()) {
        const auto pairs = load_question_pairs(pairs_path);
        std::vector<MatchResult> results;
        const auto metrics = evaluate_matching(*pipeline, pairs, &results);
        auto rows = nlohmann::json::array();
        for (const auto& r : results) rows.push_back(match_json(r));
        std::cout << nlohmann::json{{"metrics", to_json(metrics)}, {"pairs", rows}}.dump(2) << '\n';
      } else {
        if (left.empty() || right.empty()) throw Error("match needs --pairs or two questions");
        std::cout << match_json(pipeline->match(left, right)).dump(2) << '\n';
      }
    } else if (eval_cmd->parsed()) {
      const auto config = load_config(config_path_or_env(config_path));
      const auto which = parse_split_name(split);
      if (!which) throw Error("unknown split \"" + split + "\"");
      write_text(out_path, run_evaluation(config, *which).dump(2) + "\n");
    } else if (sweep_cmd->parsed()) {
      const auto config = load_config(config_path_or_env(config_path));
      if (config.task != Task::kFaq) throw Error("sweep supports the faq task only");
      const auto which = parse_split_name(sweep_split);
      if (!which) throw Error("unknown split \"" + sweep_split + "\"");
      const auto k_values = parse_topic_list(topics);
      auto experiment = assemble_experiment(config, *which);
      SweepSettings settings;
      settings.bm25 = config.bm25;
      settings.plsa = config.plsa;
      settings.top_l = config.top_l;
      settings.fusion = config.fusion;
      settings.injection = config.injection;
      settings.external = load_knowledge(config);
      settings.scorer_factory = [&config](const Corpus& c) { return make_scorer(config.scorer, c); };
      const auto rows = sweep_topics(experiment.train, experiment.queries, k_values, settings);
      const bool as_json = out_path.size() >= 5 && out_path.ends_with(".json");
      write_text(out_path, as_json ? sweep_json(rows).dump(2) + "\n" : sweep_csv(rows));
    } else if (serve_cmd->parsed()) {
      const auto config = load_config(config_path_or_env(config_path));
      const auto pipeline = assemble_pipeline(config);
      std::cerr << "serving on " << host << ':' << port << '\n';
      serve(pipeline, host, port);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
