#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "faqfuse/corpus.hpp"

namespace fixtures {

/// Builds a corpus from (question, answer) strings with ids "0", "1", ...
inline faqfuse::Corpus corpus(const std::vector<std::pair<std::string, std::string>>& pairs,
                              faqfuse::TokenizerMode mode = faqfuse::TokenizerMode::kUnicodeWord) {
  std::vector<faqfuse::QARecord> records;
  for (std::size_t i = 0; i < pairs.size(); ++i) records.push_back({std::to_string(i), pairs[i].first, pairs[i].second});
  return faqfuse::Corpus::from_records(records, mode);
}

/// Synthetic FAQ with unique questions: question i uses a private token
/// "q<i>" plus shared filler; answers repeat every `answer_period` pairs.
inline faqfuse::Corpus synthetic(std::size_t n, std::size_t answer_period = 7) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string question = "how do i q" + std::to_string(i) + " topic" + std::to_string(i % 11) + " please";
    const std::string answer = "answer number " + std::to_string(i % answer_period) + " covers topic" +
                               std::to_string(i % answer_period);
    pairs.emplace_back(question, answer);
  }
  return corpus(pairs);
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("faqfuse-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
