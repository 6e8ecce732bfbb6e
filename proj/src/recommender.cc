// Apache License, Version 2.0, refer to LICENSE.txt

#include "socialrec/recommender.hh"

#include <algorithm>

#include "socialrec/error.hh"

namespace socialrec {

std::vector<std::vector<ItemIndex>> user_histories(std::size_t num_users,
                                                   std::span<const Interaction> train) {
  std::vector<std::vector<ItemIndex>> history(num_users);
  for (const auto& x : train) history.at(x.user).push_back(x.item);
  for (auto& h : history) {
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
  }
  return history;
}

std::vector<ScoredItem> rank_fresh(std::span<const double> scores,
                                   std::span<const ItemIndex> excluded, std::size_t n) {
  std::vector<ScoredItem> candidates;
  candidates.reserve(scores.size());
  for (ItemIndex i = 0; i < scores.size(); ++i) {
    if (std::binary_search(excluded.begin(), excluded.end(), i)) continue;
    candidates.push_back({i, scores[i]});
  }
  auto before = [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  };
  if (n == 0 || n >= candidates.size()) {
    std::sort(candidates.begin(), candidates.end(), before);
  } else {
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                      candidates.end(), before);
    candidates.resize(n);
  }
  return candidates;
}

RankedList recommend_top_n(const ParamSet& params, const Corpus& corpus,
                           std::span<const ItemIndex> history, UserIndex u, std::size_t n) {
  if (u >= params.num_users()) throw ContractViolation("unknown user index " + std::to_string(u));
  if (n == 0) throw ContractViolation("n must be >= 1");
  RankedList list;
  list.users = {u};
  list.items = rank_fresh(item_scores(params, corpus, u), history, n);
  return list;
}

RankedList recommend_top_n(const ParamSet& params, const Corpus& corpus,
                           std::span<const Interaction> train, UserIndex u, std::size_t n) {
  if (u >= params.num_users()) throw ContractViolation("unknown user index " + std::to_string(u));
  std::vector<ItemIndex> history;
  for (const auto& x : train) {
    if (x.user == u) history.push_back(x.item);
  }
  std::sort(history.begin(), history.end());
  history.erase(std::unique(history.begin(), history.end()), history.end());
  return recommend_top_n(params, corpus, std::span<const ItemIndex>(history), u, n);
}

}  // namespace socialrec
