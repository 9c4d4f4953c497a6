#include "faqfuse/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <httplib.h>

namespace faqfuse {

AnswerId AnswerDistribution::argmax() const {
  if (probs.empty()) throw Error("empty answer distribution");
  return static_cast<AnswerId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double cosine(const TermVector& a, const TermVector& b) {
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (const auto& [token, weight] : a) {
    norm_a += weight * weight;
    if (const auto it = b.find(token); it != b.end()) dot += weight * it->second;
  }
  for (const auto& [token, weight] : b) norm_b += weight * weight;
  if (norm_a <= 0.0 || norm_b <= 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(norm_a * norm_b), 0.0, 1.0);
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (auto& p : out) p /= sum;
  return out;
}

std::shared_ptr<BaselineScorer> BaselineScorer::fit(const Corpus& corpus) {
  if (corpus.empty()) throw Error("baseline scorer: empty corpus");
  std::vector<std::vector<std::string>> documents;
  documents.reserve(corpus.answers().size());
  for (const auto& answer : corpus.answers()) documents.push_back(answer.tokens);
  return fit(std::move(documents), corpus.tokenizer());
}

std::shared_ptr<BaselineScorer> BaselineScorer::fit(std::vector<std::vector<std::string>> documents,
                                                    TokenizerMode mode) {
  if (documents.empty()) throw Error("baseline scorer: no documents");
  auto scorer = std::make_shared<BaselineScorer>();
  scorer->mode_ = mode;
  scorer->n_documents_ = documents.size();
  for (const auto& doc : documents) {
    std::set<std::string_view> unique(doc.begin(), doc.end());
    for (const auto& token : unique) {
      auto it = scorer->document_frequency_.find(token);
      if (it == scorer->document_frequency_.end()) scorer->document_frequency_.emplace(std::string(token), 1);
      else ++it->second;
    }
  }
  scorer->answer_vectors_.reserve(documents.size());
  for (const auto& doc : documents) scorer->answer_vectors_.push_back(scorer->vectorize(doc));
  return scorer;
}

double BaselineScorer::idf(std::string_view token) const {
  const auto it = document_frequency_.find(token);
  const double df = it == document_frequency_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(n_documents_)) / (1.0 + df)) + 1.0;
}

TermVector BaselineScorer::vectorize(std::span<const std::string> tokens) const {
  TermVector v;
  for (const auto& token : tokens) v[token] += 1.0;
  for (auto& [token, weight] : v) weight *= idf(token);
  return v;
}

std::vector<double> BaselineScorer::cosines(std::string_view query) const {
  const auto q = vectorize(tokenize(query, mode_));
  std::vector<double> out;
  out.reserve(answer_vectors_.size());
  for (const auto& a : answer_vectors_) out.push_back(cosine(q, a));
  return out;
}

AnswerDistribution BaselineScorer::score_answers(std::string_view query, const InjectedSequence*) const {
  return {softmax(cosines(query))};
}

PairScore BaselineScorer::score_pair(std::string_view left, std::string_view right, const InjectedSequence*,
                                     const InjectedSequence*) const {
  return {cosine(vectorize(tokenize(left, mode_)), vectorize(tokenize(right, mode_)))};
}

std::string answer_key(AnswerId id) { return std::to_string(id); }

AnswerDistribution parse_probs_response(const nlohmann::json& response, std::size_t answer_count) {
  using Kind = TransportError::Kind;
  if (!response.is_object() || !response.contains("probs") || !response["probs"].is_object())
    throw TransportError(Kind::kProtocol, "scorer response lacks a \"probs\" object");
  const auto& probs = response["probs"];
  if (probs.size() != answer_count)
    throw TransportError(Kind::kProtocol, "scorer returned " + std::to_string(probs.size()) + " answers, expected " +
                                              std::to_string(answer_count));
  AnswerDistribution out{std::vector<double>(answer_count, 0.0)};
  double sum = 0.0;
  for (AnswerId id = 0; id < answer_count; ++id) {
    const auto it = probs.find(answer_key(id));
    if (it == probs.end()) throw TransportError(Kind::kProtocol, "scorer response is missing answer id " + answer_key(id));
    if (!it->is_number()) throw TransportError(Kind::kProtocol, "non-numeric probability for answer " + answer_key(id));
    const double p = it->get<double>();
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw TransportError(Kind::kProtocol, "probability out of range for answer " + answer_key(id));
    out.probs[id] = p;
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-3) throw TransportError(Kind::kProtocol, "scorer probabilities do not sum to 1");
  for (auto& p : out.probs) p /= sum;
  return out;
}

RemoteScorer::RemoteScorer(std::string base_url, std::size_t answer_count, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), answer_count_(answer_count), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

namespace {

httplib::Client make_client(const std::string& base_url, std::chrono::milliseconds timeout) {
  httplib::Client client(base_url);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  return client;
}

[[noreturn]] void raise_transport(httplib::Error error, std::chrono::steady_clock::duration elapsed,
                                  std::chrono::milliseconds timeout, const std::string& url) {
  using Kind = TransportError::Kind;
  const bool timed_out = error == httplib::Error::ConnectionTimeout ||
                         (error == httplib::Error::Read && elapsed >= timeout * 9 / 10);
  if (timed_out) throw TransportError(Kind::kTimeout, "scorer at " + url + " timed out");
  throw TransportError(Kind::kUnreachable, "scorer at " + url + " unreachable: " + httplib::to_string(error));
}

}  // namespace

nlohmann::json RemoteScorer::post(const nlohmann::json& body) const {
  using Kind = TransportError::Kind;
  auto client = make_client(base_url_, timeout_);
  const auto start = std::chrono::steady_clock::now();
  const auto result = client.Post("/score", body.dump(), "application/json");
  if (!result) raise_transport(result.error(), std::chrono::steady_clock::now() - start, timeout_, base_url_);
  if (result->status != 200)
    throw TransportError(Kind::kProtocol, "scorer returned HTTP " + std::to_string(result->status));
  try {
    return nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::parse_error&) {
    throw TransportError(Kind::kProtocol, "scorer returned invalid JSON");
  }
}

AnswerDistribution RemoteScorer::score_answers(std::string_view query, const InjectedSequence* injected) const {
  auto ids = nlohmann::json::array();
  for (AnswerId id = 0; id < answer_count_; ++id) ids.push_back(answer_key(id));
  const nlohmann::json body = {{"mode", "faq"},
                               {"query", std::string(query)},
                               {"injected", injected ? to_json(*injected) : nlohmann::json(nullptr)},
                               {"answer_ids", std::move(ids)}};
  return parse_probs_response(post(body), answer_count_);
}

PairScore RemoteScorer::score_pair(std::string_view left, std::string_view right,
                                   const InjectedSequence* injected_left,
                                   const InjectedSequence* injected_right) const {
  using Kind = TransportError::Kind;
  const nlohmann::json body = {{"mode", "match"},
                               {"left", std::string(left)},
                               {"right", std::string(right)},
                               {"injected_left", injected_left ? to_json(*injected_left) : nlohmann::json(nullptr)},
                               {"injected_right", injected_right ? to_json(*injected_right) : nlohmann::json(nullptr)}};
  const auto response = post(body);
  if (!response.is_object() || !response.contains("similarity") || !response["similarity"].is_number())
    throw TransportError(Kind::kProtocol, "scorer response lacks a numeric \"similarity\"");
  const double s = response["similarity"].get<double>();
  if (!std::isfinite(s) || s < 0.0 || s > 1.0) throw TransportError(Kind::kProtocol, "similarity outside [0, 1]");
  return {s};
}

std::string RemoteScorer::health() const {
  using Kind = TransportError::Kind;
  auto client = make_client(base_url_, timeout_);
  const auto start = std::chrono::steady_clock::now();
  const auto result = client.Get("/health");
  if (!result) raise_transport(result.error(), std::chrono::steady_clock::now() - start, timeout_, base_url_);
  if (result->status != 200) throw TransportError(Kind::kProtocol, "health returned HTTP " + std::to_string(result->status));
  try {
    const auto j = nlohmann::json::parse(result->body);
    if (j.value("status", "") != "ok") throw TransportError(Kind::kProtocol, "scorer reports unhealthy");
    return j.value("model", "");
  } catch (const nlohmann::json::exception&) {
    throw TransportError(Kind::kProtocol, "health returned invalid JSON");
  }
}

}  // namespace faqfuse
