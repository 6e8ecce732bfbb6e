// Apache License, Version 2.0, refer to LICENSE.txt
//
// Group scoring: average and least-misery aggregation of member scores, and
// the social-influence score that sums the pair joint Pr(u, f, i) over every
// directed friendship edge inside the group.

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "socialrec/corpus.hh"
#include "socialrec/model.hh"
#include "socialrec/recommender.hh"

namespace socialrec {

enum class GroupStrategy { kAverage, kLeastMisery, kSocialInfluence };

inline constexpr GroupStrategy kAllGroupStrategies[] = {
    GroupStrategy::kAverage, GroupStrategy::kLeastMisery, GroupStrategy::kSocialInfluence};

// "avg", "misery", "sig".
std::optional<GroupStrategy> parse_group_strategy(const std::string& name);
std::string group_strategy_name(GroupStrategy strategy);

// Social-influence scoring needs every member to share a friendship edge
// (either direction) with another member.
class IsolatedMembersError : public std::runtime_error {
 public:
  explicit IsolatedMembersError(std::vector<UserIndex> members);
  const std::vector<UserIndex>& members() const { return members_; }

 private:
  std::vector<UserIndex> members_;
};

// Members with no in-group edge under the model's friend graph.
std::vector<UserIndex> isolated_members(const ParamSet& params, std::span<const UserIndex> group);

double score_average(const ParamSet& params, const Corpus& corpus, std::span<const UserIndex> group,
                     ItemIndex i);
double score_least_misery(const ParamSet& params, const Corpus& corpus,
                          std::span<const UserIndex> group, ItemIndex i);
double score_social_influence(const ParamSet& params, const Corpus& corpus,
                              std::span<const UserIndex> group, ItemIndex i);

// Group score of every item under a strategy.
std::vector<double> group_item_scores(const ParamSet& params, const Corpus& corpus,
                                      std::span<const UserIndex> group, GroupStrategy strategy);

// Top-n items unseen by every member; n == 0 returns the full candidate list.
RankedList recommend_group(const ParamSet& params, const Corpus& corpus,
                           const std::vector<std::vector<ItemIndex>>& histories,
                           std::span<const UserIndex> group, std::size_t n,
                           GroupStrategy strategy);

RankedList recommend_group(const ParamSet& params, const Corpus& corpus,
                           std::span<const Interaction> train, std::span<const UserIndex> group,
                           std::size_t n, GroupStrategy strategy);

}  // namespace socialrec
