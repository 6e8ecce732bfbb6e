// Apache License, Version 2.0, refer to LICENSE.txt
//
// Interaction logs, friendship graph and item tags, interned to dense indices.

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace socialrec {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;
using TagIndex = std::uint32_t;

inline constexpr TagIndex kNoTag = std::numeric_limits<TagIndex>::max();

// Bidirectional map between external string ids and dense indices.
class Interner {
 public:
  std::uint32_t intern(std::string_view id);
  std::optional<std::uint32_t> find(std::string_view id) const;
  const std::string& name(std::uint32_t index) const { return names_.at(index); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct Interaction {
  UserIndex user = 0;
  ItemIndex item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// One training observation: a (u,i) pair, or a (u,i,w) triple for content
// models. `tag == kNoTag` marks a pair.
struct Observation {
  UserIndex user = 0;
  ItemIndex item = 0;
  TagIndex tag = kNoTag;

  bool has_tag() const { return tag != kNoTag; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

class CorpusBuilder;

// Immutable after construction. Friend lists are sorted, deduplicated and
// always contain the user itself; direction is preserved as given.
class Corpus {
 public:
  std::size_t num_users() const { return users_.size(); }
  std::size_t num_items() const { return items_.size(); }
  std::size_t num_tags() const { return tags_.size(); }

  const Interner& users() const { return users_; }
  const Interner& items() const { return items_; }
  const Interner& tags() const { return tags_; }

  std::span<const Interaction> interactions() const { return interactions_; }
  std::span<const UserIndex> friends(UserIndex u) const { return friends_.at(u); }
  std::span<const TagIndex> item_tags(ItemIndex i) const { return item_tags_.at(i); }

  bool is_friend(UserIndex u, UserIndex f) const;
  // Number of non-self directed edges.
  std::size_t num_friend_edges() const;

 private:
  friend class CorpusBuilder;

  Interner users_;
  Interner items_;
  Interner tags_;
  std::vector<Interaction> interactions_;
  std::vector<std::vector<UserIndex>> friends_;
  std::vector<std::vector<TagIndex>> item_tags_;
};

class CorpusBuilder {
 public:
  void add_interaction(std::string_view user, std::string_view item);
  void add_friend(std::string_view user, std::string_view friend_id);
  // Throws DataError when the item has not been seen in any interaction.
  void add_tag(std::string_view item, std::string_view tag);
  // Registration without interactions, edges or tags.
  UserIndex add_user(std::string_view user);
  ItemIndex add_item(std::string_view item);
  TagIndex add_tag_name(std::string_view tag);

  Corpus build() &&;

 private:
  Corpus corpus_;
  std::vector<std::vector<UserIndex>> friends_;
  std::vector<std::vector<TagIndex>> item_tags_;
};

// Loads the tab-separated interaction, friendship and (optional) tag files.
// Errors are reported as DataError with file and line.
Corpus load_corpus(const std::filesystem::path& interactions_path,
                   const std::optional<std::filesystem::path>& friends_path,
                   const std::optional<std::filesystem::path>& tags_path);

// Writes interactions.tsv, friends.tsv and tags.tsv into `dir`. The friends
// file lists every self edge so users without interactions survive a reload.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

struct Split {
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultHoldoutFraction = 0.3;

// Per-user holdout. Sampling is over a user's distinct items; all occurrences
// of a held-out item move to test, so test items never appear in that user's
// train half. Users with at most one distinct item keep everything in train.
Split split_holdout(const Corpus& corpus, double fraction, std::uint64_t seed);

struct GroupEvent {
  std::vector<UserIndex> members;  // sorted, distinct, size >= 2
  ItemIndex item = 0;
};

struct GroupEventLoad {
  std::vector<GroupEvent> events;
  std::size_t dropped = 0;          // fewer than two resolvable members
  std::size_t unknown_members = 0;  // member ids not in the corpus
  double average_group_size() const;
};

// `item_id<TAB>member1,member2,...`; unknown items are a DataError.
GroupEventLoad load_group_events(const std::filesystem::path& path, const Corpus& corpus);

void write_group_events(const std::filesystem::path& path, const Corpus& corpus,
                        std::span<const GroupEvent> events);

struct ObservationSet {
  std::vector<Observation> observations;
  // Content models only: pairs whose item carries no tags and so produce no
  // triples.
  std::size_t untagged_pairs = 0;
};

// Expands interactions into model observations. With `content` each pair
// becomes one triple per tag of its item.
ObservationSet make_observations(const Corpus& corpus, std::span<const Interaction> interactions,
                                 bool content);

}  // namespace socialrec
