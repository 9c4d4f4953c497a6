#include "faqfuse/knowledge.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "faqfuse/error.hpp"
#include "faqfuse/text.hpp"

namespace faqfuse {

std::string_view to_string(KnowledgeSource source) {
  switch (source) {
    case KnowledgeSource::kExternal: return "external";
    case KnowledgeSource::kTopical: return "topical";
    case KnowledgeSource::kMerged: return "merged";
  }
  return "unknown";
}

KnowledgeBase::KnowledgeBase(std::set<Triplet> triplets, KnowledgeSource source)
    : triplets_(std::move(triplets)), source_(source) {
  for (const auto& t : triplets_) {
    auto it = by_head_.find(t.head);
    if (it == by_head_.end()) it = by_head_.emplace(t.head, std::vector<Triplet>{}).first;
    it->second.push_back(t);
  }
}

std::span<const Triplet> KnowledgeBase::by_head(std::string_view head) const {
  const auto it = by_head_.find(head);
  if (it == by_head_.end()) return {};
  return it->second;
}

KnowledgeBase read_triplets(std::istream& in) {
  std::set<Triplet> triplets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto first = line.find('\t');
    const auto second = first == std::string::npos ? std::string::npos : line.find('\t', first + 1);
    if (second == std::string::npos || line.find('\t', second + 1) != std::string::npos)
      throw ParseError("expected head<TAB>relation<TAB>tail", line_no);
    Triplet t{nfc(trim(line.substr(0, first))), nfc(trim(line.substr(first + 1, second - first - 1))),
              nfc(trim(line.substr(second + 1)))};
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) throw ParseError("empty triplet field", line_no);
    triplets.insert(std::move(t));
  }
  return KnowledgeBase(std::move(triplets), KnowledgeSource::kExternal);
}

KnowledgeBase load_triplets(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("knowledge base not found: " + path.string());
  return read_triplets(in);
}

void write_triplets(std::ostream& out, const KnowledgeBase& kb) {
  for (const auto& t : kb.triplets()) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

void save_triplets(const std::filesystem::path& path, const KnowledgeBase& kb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_triplets(out, kb);
}

KnowledgeBase triplets_from_topics(const TopicModel& model, std::size_t top_l) {
  if (top_l < 2) throw Error("knowledge: top_l must be at least 2");
  std::set<Triplet> triplets;
  for (std::size_t k = 0; k < model.k_topics(); ++k) {
    const auto words = top_words(model, k, top_l);
    const std::string relation = "relevance_T" + std::to_string(k);
    for (std::size_t i = 0; i < words.size(); ++i)
      for (std::size_t j = i + 1; j < words.size(); ++j) {
        triplets.insert({words[i], relation, words[j]});
        triplets.insert({words[j], relation, words[i]});
      }
  }
  return KnowledgeBase(std::move(triplets), KnowledgeSource::kTopical);
}

KnowledgeBase merge(const KnowledgeBase& a, const KnowledgeBase& b) {
  auto triplets = a.triplets();
  triplets.insert(b.triplets().begin(), b.triplets().end());
  return KnowledgeBase(std::move(triplets), KnowledgeSource::kMerged);
}

void InjectionConfig::validate() const {
  if (max_triplets_per_token == 0) throw Error("injection: max_triplets_per_token must be positive");
  if (max_sequence_length == 0) throw Error("injection: max_sequence_length must be positive");
}

InjectedSequence inject(std::span<const std::string> query_tokens, const KnowledgeBase& kb,
                        const InjectionConfig& config) {
  config.validate();
  if (query_tokens.empty()) throw Error("injection: empty query");

  InjectedSequence out;
  auto trunk = query_tokens;
  if (trunk.size() > config.max_sequence_length) {
    trunk = trunk.first(config.max_sequence_length);
    out.trunk_truncated = true;
  }

  // Group id per emitted token: trunk tokens share group 0, each branch gets
  // its own; anchor[i] is the trunk slot a branch hangs from.
  std::vector<std::size_t> group;
  std::vector<std::size_t> anchor;
  std::size_t budget = config.max_sequence_length - trunk.size();
  std::size_t next_group = 1;
  bool branches_open = true;

  for (std::size_t position = 0; position < trunk.size(); ++position) {
    const std::size_t anchor_slot = out.tokens.size();
    out.tokens.push_back(trunk[position]);
    out.soft_positions.push_back(position);
    out.trunk_mask.push_back(true);
    group.push_back(0);
    anchor.push_back(anchor_slot);

    if (!branches_open) continue;
    const auto candidates = kb.by_head(trunk[position]);
    const auto take = std::min(candidates.size(), config.max_triplets_per_token);
    for (std::size_t t = 0; t < take; ++t) {
      if (budget < 2) {
        branches_open = false;
        break;
      }
      budget -= 2;
      const std::size_t branch = next_group++;
      const std::string* branch_tokens[] = {&candidates[t].relation, &candidates[t].tail};
      for (std::size_t offset = 0; offset < 2; ++offset) {
        out.tokens.push_back(*branch_tokens[offset]);
        out.soft_positions.push_back(position + 1 + offset);
        out.trunk_mask.push_back(false);
        group.push_back(branch);
        anchor.push_back(anchor_slot);
      }
    }
  }

  const std::size_t n = out.tokens.size();
  out.visible.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      bool v;
      if (i == j || group[i] == group[j]) v = true;
      else if (group[i] == 0) v = anchor[j] == i;   // i trunk, j branch
      else if (group[j] == 0) v = anchor[i] == j;   // i branch, j trunk
      else v = false;                               // different branches
      out.visible[i * n + j] = v ? 1 : 0;
    }
  return out;
}

nlohmann::json to_json(const InjectedSequence& sequence) {
  const std::size_t n = sequence.size();
  auto visible = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t j = 0; j < n; ++j) row.push_back(sequence.is_visible(i, j) ? 1 : 0);
    visible.push_back(std::move(row));
  }
  auto trunk = nlohmann::json::array();
  for (bool t : sequence.trunk_mask) trunk.push_back(t);
  return {{"tokens", sequence.tokens},
          {"soft_positions", sequence.soft_positions},
          {"visible", std::move(visible)},
          {"trunk_mask", std::move(trunk)}};
}

}  // namespace faqfuse
