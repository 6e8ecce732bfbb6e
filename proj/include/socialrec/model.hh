// Apache License, Version 2.0, refer to LICENSE.txt
//
// Parameter tables of the generative model family and the closed-form
// probabilities computed from them.
//
// The unified joint factorizes as
//
//   Pr(u, f, z, i[, w]) = Pr(z) Pr(u|f) Pr(f|z) Pr(i|z) [Pr(w|z)],  f in F(u)
//
// The four variants share this engine: `social == false` collapses every
// friend list to {u} (so Pr(u|u) == 1 and the model reduces to the plain
// aspect model), `content == false` drops the tag factor.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socialrec/corpus.hh"

namespace socialrec {

using Topic = std::uint32_t;

enum class Convergence { kAbsolute, kPerObservation };

struct ModelConfig {
  bool social = true;
  bool content = false;
  std::uint32_t topics = 60;
  std::uint64_t seed = 1;
  double epsilon = 1e-4;
  std::uint32_t max_iters = 50;
  Convergence convergence = Convergence::kAbsolute;

  // Throws ContractViolation when K, epsilon or max_iters is out of range.
  void validate() const;
};

// "cf", "cf+si", "cf+ic", "cf+si+ic".
ModelConfig config_for_variant(const std::string& variant);
std::string variant_name(const ModelConfig& config);

// CSR adjacency: F(u) as sorted user indices, self always present. Every
// influence-shaped table is stored as one value per (u, slot) aligned with it.
class FriendGraph {
 public:
  FriendGraph() = default;
  // `lists[u]` must be sorted, distinct and contain u.
  explicit FriendGraph(const std::vector<std::vector<UserIndex>>& lists);

  // Friend lists of the corpus, or {u} for every user when `social` is off.
  static FriendGraph from_corpus(const Corpus& corpus, bool social);

  std::size_t num_users() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_slots() const { return friends_.size(); }

  std::span<const UserIndex> friends(UserIndex u) const {
    return {friends_.data() + offsets_[u], friends_.data() + offsets_[u + 1]};
  }
  std::size_t offset(UserIndex u) const { return offsets_[u]; }
  std::size_t degree(UserIndex u) const { return offsets_[u + 1] - offsets_[u]; }

  // Slot of f in F(u), if f is a friend of u.
  std::optional<std::size_t> slot(UserIndex u, UserIndex f) const;

  friend bool operator==(const FriendGraph&, const FriendGraph&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<UserIndex> friends_;
};

// Row-major K x n table; each row is a distribution.
class TopicTable {
 public:
  TopicTable() = default;
  TopicTable(std::size_t topics, std::size_t cols, double fill = 0.0)
      : rows_(topics), cols_(cols), data_(topics * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t z, std::size_t c) const { return data_[z * cols_ + c]; }
  double& operator()(std::size_t z, std::size_t c) { return data_[z * cols_ + c]; }
  std::span<const double> row(std::size_t z) const { return {data_.data() + z * cols_, cols_}; }
  std::span<double> row(std::size_t z) { return {data_.data() + z * cols_, cols_}; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  friend bool operator==(const TopicTable&, const TopicTable&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Model parameters. Immutable by convention once handed out; the trainers
// build fresh instances each iteration.
struct ParamSet {
  bool social = true;
  bool content = false;
  std::uint64_t seed = 0;
  std::shared_ptr<const FriendGraph> graph;

  std::vector<double> topic_prior;  // Pr(z)
  // Pr(u|f) for f = F(u)[slot], stored at graph->offset(u) + slot.
  // Normalized per f over {u : f in F(u)}.
  std::vector<double> influence;
  TopicTable topic_user;  // Pr(f|z), K x N
  TopicTable topic_item;  // Pr(i|z), K x M
  TopicTable topic_tag;   // Pr(w|z), K x |W|; empty when content is off

  std::size_t num_topics() const { return topic_prior.size(); }
  std::size_t num_users() const { return topic_user.cols(); }
  std::size_t num_items() const { return topic_item.cols(); }
  std::size_t num_tags() const { return topic_tag.cols(); }

  // Pr(u|f); throws ContractViolation when f is not in F(u).
  double influence_of(UserIndex f, UserIndex u) const;

  friend bool operator==(const ParamSet& a, const ParamSet& b);
};

// In-place normalization helpers shared by initialization and the M-step.
// Each returns the number of groups whose total mass was zero; those groups
// become uniform.
std::size_t normalize_distribution(std::span<double> values);
std::size_t normalize_rows(TopicTable& table);
// Normalizes influence-shaped values per f over {u : f in F(u)}.
std::size_t normalize_influence(const FriendGraph& graph, std::span<double> values);

// Largest absolute deviation from 1 over all five normalization families,
// or +inf if any entry is negative or non-finite.
double normalization_error(const ParamSet& params);

// Initial parameters: uniform Pr(z); seeded positive random Pr(f|z), Pr(i|z),
// Pr(w|z); Pr(u|f) proportional to the Jaccard similarity of train item sets.
ParamSet init_params(const ModelConfig& config, const Corpus& corpus,
                     std::span<const Interaction> train);

// |A n B| / |A u B| on sorted distinct ranges; 0 when both are empty.
double jaccard(std::span<const ItemIndex> a, std::span<const ItemIndex> b);

// Pr(z) Pr(u|f) Pr(f|z) Pr(i|z) [Pr(w|z)]. The tag must be given iff content
// is on.
double joint_prob(const ParamSet& params, UserIndex u, UserIndex f, Topic z, ItemIndex i,
                  TagIndex w = kNoTag);

// Unnormalized ranking score for Pr(i|u): sum over z and f in F(u), and over
// w in W_i when content is on.
double prob_item_given_user(const ParamSet& params, const Corpus& corpus, UserIndex u,
                            ItemIndex i);

// Scores for every item at once; same values as prob_item_given_user.
std::vector<double> item_scores(const ParamSet& params, const Corpus& corpus, UserIndex u);

// Pr(u, f, i) = sum_z Pr(z) Pr(u|f) Pr(f|z) Pr(i|z); requires f in F(u), f != u.
double pair_joint(const ParamSet& params, UserIndex u, UserIndex f, ItemIndex i);

inline constexpr double kLogClamp = 1e-300;

// Probability of one observation: Pr(u,i) for pairs, Pr(u,i,w) for triples.
double observation_prob(const ParamSet& params, const Observation& obs);

// Sum of log observation_prob, each clamped below at kLogClamp.
double log_likelihood(const ParamSet& params, std::span<const Observation> observations);

// Generative influence Pr(f|u), aligned with the graph's slots.
struct GenerativeInfluence {
  std::shared_ptr<const FriendGraph> graph;
  std::vector<double> values;
  std::vector<UserIndex> uniform_fallback;  // users whose row was all zero
};

GenerativeInfluence derive_generative_influence(const ParamSet& params);

}  // namespace socialrec
