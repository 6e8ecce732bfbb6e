// Apache License, Version 2.0, refer to LICENSE.txt

#include "socialrec/corpus.hh"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "socialrec/error.hh"

namespace socialrec {

namespace {

std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Calls `fn(fields, line_number)` for every non-comment, non-blank line,
// requiring exactly two non-empty tab-separated fields.
template <class Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(path.string(), line_no, "expected two tab-separated fields");
    }
    fn(fields, line_no);
  }
}

void sort_unique(std::vector<std::uint32_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::uint32_t Interner::intern(std::string_view id) {
  auto it = index_.find(std::string(id));
  if (it != index_.end()) return it->second;
  const auto index = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(id);
  index_.emplace(names_.back(), index);
  return index;
}

std::optional<std::uint32_t> Interner::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Corpus::is_friend(UserIndex u, UserIndex f) const {
  const auto& list = friends_.at(u);
  return std::binary_search(list.begin(), list.end(), f);
}

std::size_t Corpus::num_friend_edges() const {
  std::size_t edges = 0;
  for (const auto& list : friends_) edges += list.size() - 1;
  return edges;
}

UserIndex CorpusBuilder::add_user(std::string_view user) {
  const auto u = corpus_.users_.intern(user);
  if (friends_.size() <= u) friends_.resize(u + 1);
  return u;
}

ItemIndex CorpusBuilder::add_item(std::string_view item) {
  const auto i = corpus_.items_.intern(item);
  if (item_tags_.size() <= i) item_tags_.resize(i + 1);
  return i;
}

TagIndex CorpusBuilder::add_tag_name(std::string_view tag) { return corpus_.tags_.intern(tag); }

void CorpusBuilder::add_interaction(std::string_view user, std::string_view item) {
  const auto u = add_user(user);
  const auto i = add_item(item);
  corpus_.interactions_.push_back({u, i});
}

void CorpusBuilder::add_friend(std::string_view user, std::string_view friend_id) {
  const auto u = add_user(user);
  const auto f = add_user(friend_id);
  friends_[u].push_back(f);
}

void CorpusBuilder::add_tag(std::string_view item, std::string_view tag) {
  const auto i = corpus_.items_.find(item);
  if (!i) throw DataError("tag references unknown item '" + std::string(item) + "'");
  const auto w = corpus_.tags_.intern(tag);
  item_tags_[*i].push_back(w);
}

Corpus CorpusBuilder::build() && {
  friends_.resize(corpus_.users_.size());
  item_tags_.resize(corpus_.items_.size());
  for (UserIndex u = 0; u < friends_.size(); ++u) {
    friends_[u].push_back(u);
    sort_unique(friends_[u]);
  }
  for (auto& tags : item_tags_) sort_unique(tags);
  corpus_.friends_ = std::move(friends_);
  corpus_.item_tags_ = std::move(item_tags_);
  return std::move(corpus_);
}

Corpus load_corpus(const std::filesystem::path& interactions_path,
                   const std::optional<std::filesystem::path>& friends_path,
                   const std::optional<std::filesystem::path>& tags_path) {
  CorpusBuilder builder;
  for_each_record(interactions_path, [&](const auto& fields, std::size_t) {
    builder.add_interaction(fields[0], fields[1]);
  });
  if (friends_path) {
    for_each_record(*friends_path, [&](const auto& fields, std::size_t) {
      builder.add_friend(fields[0], fields[1]);
    });
  }
  if (tags_path) {
    for_each_record(*tags_path, [&](const auto& fields, std::size_t line_no) {
      try {
        builder.add_tag(fields[0], fields[1]);
      } catch (const DataError& e) {
        throw DataError(tags_path->string(), line_no, e.what());
      }
    });
  }
  return std::move(builder).build();
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto interactions = open_for_write(dir / "interactions.tsv");
  for (const auto& x : corpus.interactions()) {
    interactions << corpus.users().name(x.user) << '\t' << corpus.items().name(x.item) << '\n';
  }
  auto friends = open_for_write(dir / "friends.tsv");
  for (UserIndex u = 0; u < corpus.num_users(); ++u) {
    for (auto f : corpus.friends(u)) {
      friends << corpus.users().name(u) << '\t' << corpus.users().name(f) << '\n';
    }
  }
  auto tags = open_for_write(dir / "tags.tsv");
  for (ItemIndex i = 0; i < corpus.num_items(); ++i) {
    for (auto w : corpus.item_tags(i)) {
      tags << corpus.items().name(i) << '\t' << corpus.tags().name(w) << '\n';
    }
  }
}

void write_group_events(const std::filesystem::path& path, const Corpus& corpus,
                        std::span<const GroupEvent> events) {
  auto out = open_for_write(path);
  for (const auto& e : events) {
    out << corpus.items().name(e.item) << '\t';
    for (std::size_t k = 0; k < e.members.size(); ++k) {
      if (k > 0) out << ',';
      out << corpus.users().name(e.members[k]);
    }
    out << '\n';
  }
}

Split split_holdout(const Corpus& corpus, double fraction, std::uint64_t seed) {
  Split split;
  split.seed = seed;

  std::vector<std::vector<ItemIndex>> items_by_user(corpus.num_users());
  for (const auto& x : corpus.interactions()) items_by_user[x.user].push_back(x.item);

  // held_out[u] is the sorted set of u's test items.
  std::vector<std::vector<ItemIndex>> held_out(corpus.num_users());
  for (UserIndex u = 0; u < corpus.num_users(); ++u) {
    auto distinct = items_by_user[u];
    sort_unique(distinct);
    if (distinct.size() <= 1) continue;
    const auto n_test = static_cast<std::size_t>(
        std::lround(fraction * static_cast<double>(distinct.size())));
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(u)};
    std::mt19937_64 rng(seq);
    // Partial Fisher-Yates: the first n_test slots become the sample.
    for (std::size_t k = 0; k < n_test && k + 1 < distinct.size(); ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, distinct.size() - 1);
      std::swap(distinct[k], distinct[pick(rng)]);
    }
    distinct.resize(std::min(n_test, distinct.size() - 1));
    std::sort(distinct.begin(), distinct.end());
    held_out[u] = std::move(distinct);
  }

  for (const auto& x : corpus.interactions()) {
    const auto& test_items = held_out[x.user];
    if (std::binary_search(test_items.begin(), test_items.end(), x.item)) {
      split.test.push_back(x);
    } else {
      split.train.push_back(x);
    }
  }
  return split;
}

double GroupEventLoad::average_group_size() const {
  if (events.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : events) total += static_cast<double>(e.members.size());
  return total / static_cast<double>(events.size());
}

GroupEventLoad load_group_events(const std::filesystem::path& path, const Corpus& corpus) {
  GroupEventLoad load;
  for_each_record(path, [&](const auto& fields, std::size_t line_no) {
    const auto item = corpus.items().find(fields[0]);
    if (!item) {
      throw DataError(path.string(), line_no, "unknown item '" + std::string(fields[0]) + "'");
    }
    GroupEvent event;
    event.item = *item;
    for (auto member : split_on(fields[1], ',')) {
      if (member.empty()) continue;
      if (auto u = corpus.users().find(member)) {
        event.members.push_back(*u);
      } else {
        ++load.unknown_members;
      }
    }
    sort_unique(event.members);
    if (event.members.size() < 2) {
      ++load.dropped;
      return;
    }
    load.events.push_back(std::move(event));
  });
  return load;
}

ObservationSet make_observations(const Corpus& corpus, std::span<const Interaction> interactions,
                                 bool content) {
  ObservationSet set;
  set.observations.reserve(interactions.size());
  for (const auto& x : interactions) {
    if (!content) {
      set.observations.push_back({x.user, x.item, kNoTag});
      continue;
    }
    const auto tags = corpus.item_tags(x.item);
    if (tags.empty()) ++set.untagged_pairs;
    for (auto w : tags) set.observations.push_back({x.user, x.item, w});
  }
  return set;
}

}  // namespace socialrec
