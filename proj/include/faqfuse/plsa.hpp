#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "faqfuse/corpus.hpp"

namespace faqfuse {

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct PlsaConfig {
  std::size_t k_topics = 10;
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;  ///< relative log-likelihood improvement
  std::uint64_t seed = 0;
  double smoothing_epsilon = 1e-10;  ///< used inside logarithms only

  void validate() const;
  bool operator==(const PlsaConfig&) const = default;
};

struct TopicModel {
  PlsaConfig config;
  std::vector<std::string> vocabulary;  ///< id order matches the training corpus vocabulary
  Matrix word_given_topic;              ///< K x |V|, rows sum to 1
  Matrix topic_given_doc;               ///< N x K, rows sum to 1
  double final_log_likelihood = 0.0;
  /// Log-likelihood at initialization followed by one value per EM iteration.
  std::vector<double> log_likelihood_trace;

  std::size_t k_topics() const { return word_given_topic.rows(); }

  bool operator==(const TopicModel&) const = default;
};

/// One bag-of-words document: (vocabulary id, count) sorted by id.
using DocumentCounts = std::vector<std::pair<std::size_t, std::size_t>>;

/// Documents are the concatenated question and answer tokens of each pair.
std::vector<DocumentCounts> plsa_documents(const Corpus& corpus, std::span<const std::string> vocabulary);

/// EM training of P(w|d) = sum_k P(w|T_k) P(T_k|d).
TopicModel train_plsa(const Corpus& corpus, const PlsaConfig& config);

/// sum_n sum_w c(w,d_n) ln(sum_k P(w|T_k) P(T_k|d_n) + epsilon).
double log_likelihood(const TopicModel& model, const Corpus& corpus);
double log_likelihood(const Matrix& word_given_topic, const Matrix& topic_given_doc,
                      std::span<const DocumentCounts> documents, double smoothing_epsilon);

/// Highest P(w|T_k) first; ties by ascending vocabulary id.
std::vector<std::string> top_words(const TopicModel& model, std::size_t topic, std::size_t top_l);

nlohmann::json to_json(const TopicModel& model);
TopicModel topic_model_from_json(const nlohmann::json& j);
void save_topic_model(const std::filesystem::path& path, const TopicModel& model);
TopicModel load_topic_model(const std::filesystem::path& path);

}  // namespace faqfuse
