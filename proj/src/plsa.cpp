#include "faqfuse/plsa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "faqfuse/error.hpp"

namespace faqfuse {
namespace {

// Uniform in [0, 1) from the top 53 bits; avoids implementation-defined
// standard distributions so models are reproducible across toolchains.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Normalized i.i.d. Exp(1) draws, i.e. a sample from a symmetric Dirichlet(1).
void dirichlet_one(std::span<double> row, std::mt19937_64& rng) {
  double sum = 0.0;
  for (auto& x : row) {
    x = -std::log1p(-unit_uniform(rng));
    sum += x;
  }
  if (sum <= 0.0) {
    std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    return;
  }
  for (auto& x : row) x /= sum;
}

void normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (sum > 0.0) {
      for (auto& x : row) x /= sum;
    } else {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    }
  }
}

}  // namespace

void PlsaConfig::validate() const {
  if (k_topics == 0) throw Error("plsa: k_topics must be positive");
  if (max_iterations == 0) throw Error("plsa: max_iterations must be positive");
  if (!(tolerance > 0.0)) throw Error("plsa: tolerance must be positive");
  if (!(smoothing_epsilon > 0.0)) throw Error("plsa: smoothing_epsilon must be positive");
}

std::vector<DocumentCounts> plsa_documents(const Corpus& corpus, std::span<const std::string> vocabulary) {
  std::map<std::string_view, std::size_t> ids;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) ids.emplace(vocabulary[i], i);

  std::vector<DocumentCounts> documents;
  documents.reserve(corpus.size());
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    std::map<std::size_t, std::size_t> counts;
    for (const auto& token : corpus.document_tokens(n)) {
      const auto it = ids.find(token);
      if (it == ids.end()) throw Error("plsa: token \"" + token + "\" is not in the model vocabulary");
      ++counts[it->second];
    }
    documents.emplace_back(counts.begin(), counts.end());
  }
  return documents;
}

double log_likelihood(const Matrix& word_given_topic, const Matrix& topic_given_doc,
                      std::span<const DocumentCounts> documents, double smoothing_epsilon) {
  const std::size_t k_topics = word_given_topic.rows();
  double total = 0.0;
  for (std::size_t n = 0; n < documents.size(); ++n) {
    const auto theta = topic_given_doc.row(n);
    for (const auto& [w, count] : documents[n]) {
      double p = 0.0;
      for (std::size_t k = 0; k < k_topics; ++k) p += word_given_topic(k, w) * theta[k];
      total += static_cast<double>(count) * std::log(p + smoothing_epsilon);
    }
  }
  return total;
}

double log_likelihood(const TopicModel& model, const Corpus& corpus) {
  const auto documents = plsa_documents(corpus, model.vocabulary);
  if (documents.size() != model.topic_given_doc.rows())
    throw Error("plsa: corpus size does not match the model's document count");
  return log_likelihood(model.word_given_topic, model.topic_given_doc, documents, model.config.smoothing_epsilon);
}

TopicModel train_plsa(const Corpus& corpus, const PlsaConfig& config) {
  config.validate();
  if (corpus.empty()) throw Error("plsa: empty corpus");
  const auto& vocabulary = corpus.vocabulary().tokens();
  if (vocabulary.empty()) throw Error("plsa: empty vocabulary");
  if (config.k_topics > vocabulary.size()) throw Error("plsa: more topics than vocabulary entries");

  const std::size_t k_topics = config.k_topics;
  const std::size_t n_words = vocabulary.size();
  const auto documents = plsa_documents(corpus, vocabulary);

  TopicModel model;
  model.config = config;
  model.vocabulary = vocabulary;
  model.word_given_topic = Matrix(k_topics, n_words);
  model.topic_given_doc = Matrix(documents.size(), k_topics, 1.0 / static_cast<double>(k_topics));

  std::mt19937_64 rng(config.seed);
  for (std::size_t k = 0; k < k_topics; ++k) dirichlet_one(model.word_given_topic.row(k), rng);

  auto ll = log_likelihood(model.word_given_topic, model.topic_given_doc, documents, config.smoothing_epsilon);
  model.log_likelihood_trace.push_back(ll);

  std::vector<double> posterior(k_topics);
  for (std::size_t iteration = 0; iteration < config.max_iterations; ++iteration) {
    Matrix word_acc(k_topics, n_words);
    Matrix topic_acc(documents.size(), k_topics);

    for (std::size_t n = 0; n < documents.size(); ++n) {
      const auto theta = model.topic_given_doc.row(n);
      auto theta_acc = topic_acc.row(n);
      for (const auto& [w, count] : documents[n]) {
        double denom = 0.0;
        for (std::size_t k = 0; k < k_topics; ++k) {
          posterior[k] = model.word_given_topic(k, w) * theta[k];
          denom += posterior[k];
        }
        const double c = static_cast<double>(count);
        for (std::size_t k = 0; k < k_topics; ++k) {
          const double responsibility = denom > 0.0 ? posterior[k] / denom : 1.0 / static_cast<double>(k_topics);
          word_acc(k, w) += c * responsibility;
          theta_acc[k] += c * responsibility;
        }
      }
    }
    normalize_rows(word_acc);
    normalize_rows(topic_acc);
    model.word_given_topic = std::move(word_acc);
    model.topic_given_doc = std::move(topic_acc);

    const double previous = ll;
    ll = log_likelihood(model.word_given_topic, model.topic_given_doc, documents, config.smoothing_epsilon);
    model.log_likelihood_trace.push_back(ll);

    const double scale = std::abs(previous);
    if (scale == 0.0 || (ll - previous) / scale < config.tolerance) break;
  }
  model.final_log_likelihood = ll;
  return model;
}

std::vector<std::string> top_words(const TopicModel& model, std::size_t topic, std::size_t top_l) {
  if (topic >= model.k_topics()) throw Error("plsa: topic index out of range");
  if (top_l == 0 || top_l > model.vocabulary.size()) throw Error("plsa: top_l must be in [1, |V|]");
  const auto row = model.word_given_topic.row(topic);
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_l), order.end(),
                    [&](std::size_t a, std::size_t b) { return row[a] != row[b] ? row[a] > row[b] : a < b; });
  std::vector<std::string> words;
  words.reserve(top_l);
  for (std::size_t i = 0; i < top_l; ++i) words.push_back(model.vocabulary[order[i]]);
  return words;
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t cols) {
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto values = j[r].get<std::vector<double>>();
    if (values.size() != cols) throw ParseError("plsa: ragged matrix row", 0);
    std::copy(values.begin(), values.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const TopicModel& model) {
  return {
      {"format", "faqfuse-plsa-v1"},
      {"config",
       {{"k_topics", model.config.k_topics},
        {"max_iterations", model.config.max_iterations},
        {"tolerance", model.config.tolerance},
        {"seed", model.config.seed},
        {"smoothing_epsilon", model.config.smoothing_epsilon}}},
      {"vocabulary", model.vocabulary},
      {"word_given_topic", matrix_json(model.word_given_topic)},
      {"topic_given_doc", matrix_json(model.topic_given_doc)},
      {"final_log_likelihood", model.final_log_likelihood},
      {"log_likelihood_trace", model.log_likelihood_trace},
  };
}

TopicModel topic_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "faqfuse-plsa-v1") throw ParseError("unsupported topic model format", 0);
    TopicModel model;
    const auto& c = j.at("config");
    model.config.k_topics = c.at("k_topics").get<std::size_t>();
    model.config.max_iterations = c.at("max_iterations").get<std::size_t>();
    model.config.tolerance = c.at("tolerance").get<double>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.config.smoothing_epsilon = c.at("smoothing_epsilon").get<double>();
    model.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    model.word_given_topic = matrix_from_json(j.at("word_given_topic"), model.vocabulary.size());
    model.topic_given_doc = matrix_from_json(j.at("topic_given_doc"), model.config.k_topics);
    if (model.word_given_topic.rows() != model.config.k_topics) throw ParseError("plsa: topic count mismatch", 0);
    model.final_log_likelihood = j.at("final_log_likelihood").get<double>();
    model.log_likelihood_trace = j.at("log_likelihood_trace").get<std::vector<double>>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed topic model: ") + e.what(), 0);
  }
}

void save_topic_model(const std::filesystem::path& path, const TopicModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(model).dump() << '\n';
}

TopicModel load_topic_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("topic model not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("topic model is not valid JSON: ") + e.what(), 0);
  }
  return topic_model_from_json(j);
}

}  // namespace faqfuse
