#include "faqfuse/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "faqfuse/error.hpp"

namespace faqfuse {
namespace {

double iqf_formula(std::size_t n_questions, std::size_t containing) {
  const double n = static_cast<double>(n_questions);
  const double nw = static_cast<double>(containing);
  return std::log(1.0 + (n - nw + 0.5) / (nw + 0.5));
}

}  // namespace

void Bm25Params::validate() const {
  if (!(k1 >= 0.0) || !std::isfinite(k1)) throw Error("bm25: k1 must be a finite non-negative number");
  if (!(b >= 0.0 && b <= 1.0)) throw Error("bm25: b must lie in [0, 1]");
}

Bm25Index Bm25Index::build(const Corpus& corpus, const Bm25Params& params) {
  std::vector<std::vector<std::string>> questions;
  questions.reserve(corpus.size());
  for (const auto& pair : corpus.pairs()) questions.push_back(pair.question_tokens);
  return build(questions, corpus.tokenizer(), params);
}

Bm25Index Bm25Index::build(std::span<const std::vector<std::string>> questions, TokenizerMode mode,
                           const Bm25Params& params) {
  params.validate();
  if (questions.empty()) throw Error("bm25: cannot index an empty collection");

  Bm25Index index;
  index.params_ = params;
  index.mode_ = mode;
  index.question_lengths_.reserve(questions.size());

  std::uint64_t total_length = 0;
  for (std::size_t n = 0; n < questions.size(); ++n) {
    std::map<std::string_view, std::uint32_t> counts;
    for (const auto& token : questions[n]) ++counts[token];
    for (const auto& [token, count] : counts) {
      auto it = index.postings_.find(token);
      if (it == index.postings_.end()) it = index.postings_.emplace(std::string(token), std::vector<Posting>{}).first;
      it->second.push_back({static_cast<std::uint32_t>(n), count});
    }
    index.question_lengths_.push_back(static_cast<std::uint32_t>(questions[n].size()));
    total_length += questions[n].size();
  }
  index.avg_len_ = static_cast<double>(total_length) / static_cast<double>(questions.size());
  for (const auto& [token, postings] : index.postings_)
    index.iqf_.emplace(token, iqf_formula(questions.size(), postings.size()));
  return index;
}

double Bm25Index::term_weight(double frequency, double length, double avg_len, double iqf) const {
  if (frequency <= 0.0) return 0.0;
  // An all-empty collection has avg_len 0; treat every question as average length.
  const double relative_length = avg_len > 0.0 ? length / avg_len : 1.0;
  const double norm = params_.k1 * ((1.0 - params_.b) + params_.b * relative_length);
  return (params_.k1 + 1.0) * frequency / (norm + frequency) * iqf;
}

double Bm25Index::score(std::span<const std::string> query, std::size_t question) const {
  if (question >= n_questions()) throw Error("bm25: question index out of range");
  const double length = question_lengths_[question];
  double total = 0.0;
  for (const auto& token : query) {
    const auto it = postings_.find(token);
    if (it == postings_.end()) continue;
    const auto& list = it->second;
    const auto hit = std::lower_bound(list.begin(), list.end(), question,
                                      [](const Posting& p, std::size_t q) { return p.question < q; });
    if (hit == list.end() || hit->question != question) continue;
    total += term_weight(hit->frequency, length, avg_len_, iqf_.find(token)->second);
  }
  return total;
}

std::vector<double> Bm25Index::score_all(std::span<const std::string> query) const {
  std::vector<double> scores(n_questions(), 0.0);
  for (const auto& token : query) {
    const auto it = postings_.find(token);
    if (it == postings_.end()) continue;
    const double weight = iqf_.find(token)->second;
    for (const auto& posting : it->second)
      scores[posting.question] +=
          term_weight(posting.frequency, question_lengths_[posting.question], avg_len_, weight);
  }
  return scores;
}

std::vector<RankedQuestion> Bm25Index::rank(std::span<const std::string> query, std::size_t top_k) const {
  if (top_k == 0) throw Error("bm25: top_k must be positive");
  const auto scores = score_all(query);
  std::vector<RankedQuestion> ranked;
  ranked.reserve(scores.size());
  for (std::size_t n = 0; n < scores.size(); ++n) ranked.push_back({n, scores[n]});
  const auto k = std::min(top_k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    [](const RankedQuestion& a, const RankedQuestion& b) {
                      return a.score != b.score ? a.score > b.score : a.question < b.question;
                    });
  ranked.resize(k);
  return ranked;
}

double Bm25Index::score_against(std::span<const std::string> query, std::span<const std::string> target) const {
  std::map<std::string_view, std::uint32_t> counts;
  for (const auto& token : target) ++counts[token];
  const double length = static_cast<double>(target.size());
  double total = 0.0;
  for (const auto& token : query) {
    const auto it = counts.find(token);
    if (it == counts.end()) continue;
    total += term_weight(it->second, length, length, iqf(token));
  }
  return total;
}

std::size_t Bm25Index::question_frequency(std::string_view token) const {
  const auto it = postings_.find(token);
  return it == postings_.end() ? 0 : it->second.size();
}

double Bm25Index::iqf(std::string_view token) const {
  const auto it = iqf_.find(token);
  return it != iqf_.end() ? it->second : iqf_formula(n_questions(), 0);
}

nlohmann::json Bm25Index::to_json() const {
  auto postings = nlohmann::json::object();
  for (const auto& [token, list] : postings_) {
    auto entries = nlohmann::json::array();
    for (const auto& p : list) entries.push_back({p.question, p.frequency});
    postings[token] = std::move(entries);
  }
  return {
      {"format", kFormat},
      {"params", {{"k1", params_.k1}, {"b", params_.b}}},
      {"tokenizer", to_string(mode_)},
      {"n_questions", n_questions()},
      {"avg_len", avg_len_},
      {"question_lengths", question_lengths_},
      {"postings", std::move(postings)},
      {"iqf", iqf_},
  };
}

Bm25Index Bm25Index::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ParseError("unsupported index format", 0);
    Bm25Index index;
    index.params_.k1 = j.at("params").at("k1").get<double>();
    index.params_.b = j.at("params").at("b").get<double>();
    index.params_.validate();
    const auto mode = parse_tokenizer_mode(j.at("tokenizer").get<std::string>());
    if (!mode) throw ParseError("unknown tokenizer mode", 0);
    index.mode_ = *mode;
    index.avg_len_ = j.at("avg_len").get<double>();
    index.question_lengths_ = j.at("question_lengths").get<std::vector<std::uint32_t>>();
    if (j.at("n_questions").get<std::size_t>() != index.question_lengths_.size())
      throw ParseError("n_questions does not match question_lengths", 0);
    for (const auto& [token, entries] : j.at("postings").items()) {
      auto& list = index.postings_[token];
      for (const auto& e : entries) {
        Posting p{e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>()};
        if (p.question >= index.n_questions() || p.frequency == 0) throw ParseError("invalid posting for " + token, 0);
        list.push_back(p);
      }
    }
    index.iqf_ = j.at("iqf").get<std::map<std::string, double, std::less<>>>();
    return index;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed index snapshot: ") + e.what(), 0);
  }
}

void write_index(std::ostream& out, const IndexSnapshot& snapshot) {
  auto j = snapshot.index.to_json();
  if (snapshot.corpus) j["corpus"] = to_json(*snapshot.corpus);
  if (!snapshot.questions.empty()) j["questions"] = snapshot.questions;
  out << j.dump() << '\n';
}

IndexSnapshot read_index(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("index is not valid JSON: ") + e.what(), 0);
  }
  IndexSnapshot snapshot{Bm25Index::from_json(j), std::nullopt, {}};
  if (j.contains("corpus")) {
    snapshot.corpus = corpus_from_json(j["corpus"]);
    if (snapshot.corpus->size() != snapshot.index.n_questions())
      throw ParseError("index corpus size does not match question count", 0);
  }
  if (j.contains("questions")) {
    snapshot.questions = j["questions"].get<std::vector<std::string>>();
    if (snapshot.questions.size() != snapshot.index.n_questions())
      throw ParseError("index question list does not match question count", 0);
  }
  return snapshot;
}

void save_index(const std::filesystem::path& path, const IndexSnapshot& snapshot) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_index(out, snapshot);
}

IndexSnapshot load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("index not found: " + path.string());
  return read_index(in);
}

}  // namespace faqfuse
