#include "faqfuse/service.hpp"

#include <httplib.h>

#include "faqfuse/error.hpp"

namespace faqfuse {

nlohmann::json ranked_list_json(const RankedList& ranked, const Corpus& corpus, std::size_t top_k) {
  auto entries = nlohmann::json::array();
  for (std::size_t i = 0; i < std::min(top_k, ranked.entries.size()); ++i) {
    const auto& e = ranked.entries[i];
    const auto& pair = corpus.pairs()[e.pair_index];
    entries.push_back({{"pair_index", e.pair_index},
                       {"id", pair.id},
                       {"question", pair.question},
                       {"answer", corpus.answers()[e.answer_id].text},
                       {"answer_id", answer_key(e.answer_id)},
                       {"bm25_raw", e.bm25_raw},
                       {"bm25_norm", e.bm25_norm},
                       {"relevance", e.relevance},
                       {"rs", e.rs}});
  }
  return {{"answer", corpus.answers()[ranked.chosen_answer].text},
          {"answer_id", answer_key(ranked.chosen_answer)},
          {"vote_applied", ranked.vote_applied},
          {"ranked", std::move(entries)}};
}

nlohmann::json match_json(const MatchResult& result) {
  return {{"score", result.score},
          {"label", result.label},
          {"bm25_raw", result.bm25_raw},
          {"bm25_norm", result.bm25_norm},
          {"similarity", result.similarity}};
}

RetrievalService::RetrievalService(std::shared_ptr<const Pipeline> pipeline) : pipeline_(std::move(pipeline)) {
  if (!pipeline_) throw Error("service: no pipeline");
}

nlohmann::json RetrievalService::health() const {
  const auto& p = *pipeline_;
  return {{"status", "ok"},
          {"components",
           {{"index", {{"format", Bm25Index::kFormat}, {"questions", p.index().n_questions()}}},
            {"corpus", p.corpus() ? p.corpus()->size() : std::size_t{0}},
            {"knowledge", p.knowledge() ? p.knowledge()->size() : std::size_t{0}},
            {"scorer", p.scorer().name()}}},
          {"requests", requests_.load()}};
}

namespace {

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    auto j = nlohmann::json::parse(req.body);
    if (j.is_object()) return j;
    reply(res, 400, {{"error", "request body must be a JSON object"}});
  } catch (const nlohmann::json::parse_error&) {
    reply(res, 400, {{"error", "invalid JSON"}});
  }
  return std::nullopt;
}

std::optional<std::string> string_field(const nlohmann::json& j, const char* key, httplib::Response& res) {
  if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  reply(res, 400, {{"error", std::string("missing string field \"") + key + "\""}});
  return std::nullopt;
}

}  // namespace

void RetrievalService::install(httplib::Server& server) {
  server.Get("/health", [this](const httplib::Request&, httplib::Response& res) { reply(res, 200, health()); });

  server.Post("/retrieve", [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    const auto body = parse_body(req, res);
    if (!body) return;
    const auto query = string_field(*body, "query", res);
    if (!query) return;
    std::size_t top_k = 5;
    if (body->contains("top_k")) {
      const auto& k = (*body)["top_k"];
      if (!k.is_number_unsigned() || k.get<std::size_t>() == 0) return reply(res, 400, {{"error", "top_k must be a positive integer"}});
      top_k = k.get<std::size_t>();
    }
    if (!pipeline_->corpus()) return reply(res, 400, {{"error", "retrieval is unavailable for a matching pipeline"}});
    try {
      reply(res, 200, ranked_list_json(pipeline_->retrieve(*query), *pipeline_->corpus(), top_k));
    } catch (const TransportError& e) {
      reply(res, 502, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  });

  server.Post("/match", [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    const auto body = parse_body(req, res);
    if (!body) return;
    const auto left = string_field(*body, "left", res);
    if (!left) return;
    const auto right = string_field(*body, "right", res);
    if (!right) return;
    try {
      reply(res, 200, match_json(pipeline_->match(*left, *right)));
    } catch (const TransportError& e) {
      reply(res, 502, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  });
}

void serve(std::shared_ptr<const Pipeline> pipeline, const std::string& host, int port) {
  httplib::Server server;
  RetrievalService service(std::move(pipeline));
  service.install(server);
  if (!server.bind_to_port(host, port)) throw Error("service: cannot bind " + host + ":" + std::to_string(port));
  server.listen_after_bind();
}

}  // namespace faqfuse
