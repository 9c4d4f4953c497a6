#include "faqfuse/corpus.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <set>

#include "faqfuse/error.hpp"

namespace faqfuse {

std::size_t Vocabulary::add(std::string_view token, std::size_t count) {
  if (auto it = ids_.find(token); it != ids_.end()) {
    frequencies_[it->second] += count;
    return it->second;
  }
  const std::size_t id = tokens_.size();
  ids_.emplace(std::string(token), id);
  tokens_.emplace_back(token);
  frequencies_.push_back(count);
  return id;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

Corpus Corpus::from_records(const std::vector<QARecord>& records, TokenizerMode mode) {
  Corpus corpus;
  corpus.mode_ = mode;
  std::map<std::string, AnswerId, std::less<>> answer_ids;
  std::set<std::string, std::less<>> seen_ids;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    if (!seen_ids.insert(record.id).second) throw ParseError("duplicate id \"" + record.id + "\"", i + 1);
    const auto question = trim(record.question);
    const auto answer = trim(record.answer);
    if (question.empty()) throw ParseError("empty question", i + 1);
    if (answer.empty()) throw ParseError("empty answer", i + 1);

    QAPair pair;
    pair.id = record.id;
    pair.question = nfc(question);
    pair.answer = nfc(answer);
    pair.question_tokens = tokenize(pair.question, mode);

    auto [it, inserted] = answer_ids.try_emplace(pair.answer, corpus.answers_.size());
    if (inserted) corpus.answers_.push_back({pair.answer, tokenize(pair.answer, mode)});
    pair.answer_id = it->second;

    for (const auto& token : pair.question_tokens) corpus.vocabulary_.add(token);
    for (const auto& token : corpus.answers_[pair.answer_id].tokens) corpus.vocabulary_.add(token);
    corpus.pairs_.push_back(std::move(pair));
  }
  return corpus;
}

std::optional<AnswerId> Corpus::find_answer(std::string_view text) const {
  const auto key = nfc(trim(text));
  for (AnswerId id = 0; id < answers_.size(); ++id)
    if (answers_[id].text == key) return id;
  return std::nullopt;
}

std::vector<std::string> Corpus::document_tokens(std::size_t n) const {
  const auto& pair = pairs_.at(n);
  std::vector<std::string> tokens = pair.question_tokens;
  const auto& answer = answers_[pair.answer_id].tokens;
  tokens.insert(tokens.end(), answer.begin(), answer.end());
  return tokens;
}

std::vector<QARecord> Corpus::records() const {
  std::vector<QARecord> out;
  out.reserve(pairs_.size());
  for (const auto& pair : pairs_) out.push_back({pair.id, pair.question, pair.answer});
  return out;
}

Corpus Corpus::subset(const std::vector<std::size_t>& pair_indices) const {
  std::vector<QARecord> selected;
  selected.reserve(pair_indices.size());
  for (auto n : pair_indices) {
    const auto& pair = pairs_.at(n);
    selected.push_back({pair.id, pair.question, pair.answer});
  }
  return from_records(selected, mode_);
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "tsv") return CorpusFormat::kTsv;
  return std::nullopt;
}

std::string_view to_string(CorpusFormat format) { return format == CorpusFormat::kJsonl ? "jsonl" : "tsv"; }

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string required_string(const nlohmann::json& object, const char* key, std::size_t line) {
  const auto it = object.find(key);
  if (it == object.end()) throw ParseError(std::string("missing \"") + key + "\" field", line);
  if (!it->is_string()) throw ParseError(std::string("\"") + key + "\" must be a string", line);
  return it->get<std::string>();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<QARecord> read_records(std::istream& in, CorpusFormat format) {
  std::vector<QARecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> record_lines;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty()) continue;
    QARecord record;
    if (format == CorpusFormat::kJsonl) {
      nlohmann::json object;
      try {
        object = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
      }
      if (!object.is_object()) throw ParseError("expected a JSON object", line_no);
      record.question = required_string(object, "question", line_no);
      record.answer = required_string(object, "answer", line_no);
      if (object.contains("id")) {
        const auto& id = object["id"];
        if (id.is_string()) record.id = id.get<std::string>();
        else if (id.is_number_integer()) record.id = std::to_string(id.get<long long>());
        else throw ParseError("\"id\" must be a string", line_no);
      } else {
        record.id = std::to_string(line_no - 1);
      }
    } else {
      auto fields = split_tabs(line);
      if (fields.size() != 2) throw ParseError("expected question<TAB>answer", line_no);
      record.id = std::to_string(line_no - 1);
      record.question = std::move(fields[0]);
      record.answer = std::move(fields[1]);
    }
    records.push_back(std::move(record));
    record_lines.push_back(line_no);
  }

  // Validate here so errors carry the physical line number.
  std::set<std::string, std::less<>> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!ids.insert(records[i].id).second) throw ParseError("duplicate id \"" + records[i].id + "\"", record_lines[i]);
    if (trim(records[i].question).empty()) throw ParseError("empty question", record_lines[i]);
    if (trim(records[i].answer).empty()) throw ParseError("empty answer", record_lines[i]);
  }
  return records;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, TokenizerMode mode) {
  auto in = open_input(path);
  return Corpus::from_records(read_records(in, format), mode);
}

void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& pair : corpus.pairs()) {
    const nlohmann::json object = {{"id", pair.id}, {"question", pair.question}, {"answer", pair.answer}};
    out << object.dump() << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_jsonl(out, corpus);
}

std::vector<QuestionPair> read_question_pairs(std::istream& in) {
  std::vector<QuestionPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) throw ParseError("expected left<TAB>right<TAB>label", line_no);
    const auto label = trim(fields[2]);
    if (label != "0" && label != "1") throw ParseError("label must be 0 or 1", line_no);
    if (trim(fields[0]).empty() || trim(fields[1]).empty()) throw ParseError("empty question", line_no);
    pairs.push_back({std::move(fields[0]), std::move(fields[1]), label == "1" ? 1 : 0});
  }
  return pairs;
}

std::vector<QuestionPair> load_question_pairs(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_question_pairs(in);
}

std::vector<std::string> unique_questions(std::span<const QuestionPair> pairs) {
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen;
  for (const auto& pair : pairs)
    for (const auto* text : {&pair.left, &pair.right}) {
      auto normalized = nfc(trim(*text));
      if (seen.insert(normalized).second) out.push_back(std::move(normalized));
    }
  return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    // Unbiased draw from [0, i) by rejection.
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do draw = rng(); while (draw >= limit);
    std::swap(order[i - 1], order[draw % bound]);
  }
  return order;
}

SplitIndices split_indices(std::size_t n, const SplitRatios& ratios, std::uint64_t seed) {
  if (n == 0) throw Error("cannot split an empty corpus");
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0) throw Error("split ratios must be non-negative");
  if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) throw Error("split ratios must sum to 1");

  auto part = [n](double r) {
    return std::min(n, static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9)));
  };
  const std::size_t n_valid = part(ratios.valid);
  const std::size_t n_test = std::min(n - n_valid, part(ratios.test));

  const auto order = seeded_permutation(n, seed);
  SplitIndices out;
  const std::size_t n_train = n - n_valid - n_test;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
  return out;
}

CorpusSplit split_corpus(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed) {
  const auto indices = split_indices(corpus.size(), ratios, seed);
  return {corpus.subset(indices.train), corpus.subset(indices.valid), corpus.subset(indices.test)};
}

nlohmann::json to_json(const Corpus& corpus) {
  auto records = nlohmann::json::array();
  for (const auto& pair : corpus.pairs()) records.push_back({{"id", pair.id}, {"question", pair.question}, {"answer", pair.answer}});
  return {{"tokenizer", to_string(corpus.tokenizer())}, {"pairs", std::move(records)}};
}

Corpus corpus_from_json(const nlohmann::json& j) {
  const auto mode = parse_tokenizer_mode(j.at("tokenizer").get<std::string>());
  if (!mode) throw ParseError("unknown tokenizer mode", 0);
  std::vector<QARecord> records;
  for (const auto& r : j.at("pairs"))
    records.push_back({r.at("id").get<std::string>(), r.at("question").get<std::string>(), r.at("answer").get<std::string>()});
  return Corpus::from_records(records, *mode);
}

}  // namespace faqfuse
