// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <vector>

#include "socialrec/corpus.hh"
#include "socialrec/model.hh"

namespace socialrec {

inline constexpr std::size_t kDefaultTopN = 5;

struct ScoredItem {
  ItemIndex item = 0;
  double score = 0.0;
};

// Ordered by descending score, ties by ascending item index.
struct RankedList {
  std::vector<UserIndex> users;  // the target user, or the group members
  std::vector<ScoredItem> items;
};

// Sorted distinct train items of every user.
std::vector<std::vector<ItemIndex>> user_histories(std::size_t num_users,
                                                   std::span<const Interaction> train);

// Orders the scores of the items not in `excluded` (sorted) and keeps the
// first n; n == 0 keeps the whole candidate list.
std::vector<ScoredItem> rank_fresh(std::span<const double> scores,
                                   std::span<const ItemIndex> excluded, std::size_t n);

// Top-n fresh items for u by Pr(i|u). Throws ContractViolation for an
// unknown user or n == 0.
RankedList recommend_top_n(const ParamSet& params, const Corpus& corpus,
                           std::span<const Interaction> train, UserIndex u, std::size_t n);

// Same, with u's sorted train items precomputed.
RankedList recommend_top_n(const ParamSet& params, const Corpus& corpus,
                           std::span<const ItemIndex> history, UserIndex u, std::size_t n);

}  // namespace socialrec
