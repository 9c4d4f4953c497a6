#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "faqfuse/plsa.hpp"

namespace faqfuse {

struct Triplet {
  std::string head;
  std::string relation;
  std::string tail;

  auto operator<=>(const Triplet&) const = default;
};

enum class KnowledgeSource { kExternal, kTopical, kMerged };

std::string_view to_string(KnowledgeSource source);

/// Deduplicated triplet set with a head-token index. Triplets sharing a head
/// are ordered lexicographically by (relation, tail).
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  KnowledgeBase(std::set<Triplet> triplets, KnowledgeSource source);

  std::span<const Triplet> by_head(std::string_view head) const;

  const std::set<Triplet>& triplets() const { return triplets_; }
  KnowledgeSource source() const { return source_; }
  std::size_t size() const { return triplets_.size(); }
  bool empty() const { return triplets_.empty(); }

  bool operator==(const KnowledgeBase& other) const { return triplets_ == other.triplets_; }

 private:
  std::set<Triplet> triplets_;
  KnowledgeSource source_ = KnowledgeSource::kExternal;
  std::map<std::string, std::vector<Triplet>, std::less<>> by_head_;
};

/// TSV `head<TAB>relation<TAB>tail`; blank lines are skipped.
KnowledgeBase read_triplets(std::istream& in);
KnowledgeBase load_triplets(const std::filesystem::path& path);
void write_triplets(std::ostream& out, const KnowledgeBase& kb);
void save_triplets(const std::filesystem::path& path, const KnowledgeBase& kb);

/// For every topic k, both orderings of every pair among its top_l words,
/// labelled "relevance_T{k}".
KnowledgeBase triplets_from_topics(const TopicModel& model, std::size_t top_l);

KnowledgeBase merge(const KnowledgeBase& a, const KnowledgeBase& b);

struct InjectionConfig {
  std::size_t max_triplets_per_token = 2;
  std::size_t max_sequence_length = 128;

  void validate() const;
  bool operator==(const InjectionConfig&) const = default;
};

/// Query tokens with knowledge branches inlined after their anchors.
struct InjectedSequence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> soft_positions;
  std::vector<bool> trunk_mask;
  /// Row-major |tokens| x |tokens|.
  std::vector<std::uint8_t> visible;
  /// Set when the query alone exceeded max_sequence_length.
  bool trunk_truncated = false;

  std::size_t size() const { return tokens.size(); }
  bool is_visible(std::size_t i, std::size_t j) const { return visible[i * tokens.size() + j] != 0; }

  bool operator==(const InjectedSequence&) const = default;
};

/// Each trunk token is followed by up to max_triplets_per_token branches
/// [relation, tail]. Branch tokens see their anchor and their own branch;
/// trunk tokens see each other. Soft positions continue from the anchor.
InjectedSequence inject(std::span<const std::string> query_tokens, const KnowledgeBase& kb,
                        const InjectionConfig& config);

nlohmann::json to_json(const InjectedSequence& sequence);

}  // namespace faqfuse
