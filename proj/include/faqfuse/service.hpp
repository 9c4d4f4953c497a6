#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <string>

#include <json.hpp>

#include "faqfuse/rank.hpp"

namespace httplib {
class Server;
}

namespace faqfuse {

/// JSON form of the first `top_k` entries of a ranking, with question and
/// answer texts looked up in `corpus`.
nlohmann::json ranked_list_json(const RankedList& ranked, const Corpus& corpus, std::size_t top_k);

nlohmann::json match_json(const MatchResult& result);

/// HTTP front end over one immutable pipeline: POST /retrieve, POST /match,
/// GET /health.
class RetrievalService {
 public:
  explicit RetrievalService(std::shared_ptr<const Pipeline> pipeline);

  void install(httplib::Server& server);

  std::size_t requests_served() const { return requests_.load(); }

  nlohmann::json health() const;

 private:
  std::shared_ptr<const Pipeline> pipeline_;
  std::atomic<std::size_t> requests_{0};
};

/// Blocks until the server stops. Throws on bind failure.
void serve(std::shared_ptr<const Pipeline> pipeline, const std::string& host, int port);

}  // namespace faqfuse
