// Apache License, Version 2.0, refer to LICENSE.txt

#include "socialrec/group.hh"

#include <algorithm>
#include <limits>

#include "socialrec/error.hh"

namespace socialrec {

namespace {

void check_group(const ParamSet& params, std::span<const UserIndex> group) {
  if (group.size() < 2) throw ContractViolation("a group needs at least two members");
  std::vector<UserIndex> sorted(group.begin(), group.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ContractViolation("group members must be distinct");
  }
  if (sorted.back() >= params.num_users()) throw ContractViolation("unknown group member");
}

std::string describe(const std::vector<UserIndex>& members) {
  std::string s = "group members without an in-group friend:";
  for (auto u : members) s += " " + std::to_string(u);
  return s;
}

void require_connected(const ParamSet& params, std::span<const UserIndex> group) {
  auto isolated = isolated_members(params, group);
  if (!isolated.empty()) throw IsolatedMembersError(std::move(isolated));
}

// Pr(z) Pr(f|z), the influencer's half of the pair joint.
std::vector<double> influencer_topic_weights(const ParamSet& params, UserIndex f) {
  std::vector<double> g(params.num_topics());
  for (Topic z = 0; z < g.size(); ++z) g[z] = params.topic_prior[z] * params.topic_user(z, f);
  return g;
}

}  // namespace

std::optional<GroupStrategy> parse_group_strategy(const std::string& name) {
  if (name == "avg" || name == "average") return GroupStrategy::kAverage;
  if (name == "misery" || name == "least-misery") return GroupStrategy::kLeastMisery;
  if (name == "sig" || name == "influence") return GroupStrategy::kSocialInfluence;
  return std::nullopt;
}

std::string group_strategy_name(GroupStrategy strategy) {
  switch (strategy) {
    case GroupStrategy::kAverage:
      return "avg";
    case GroupStrategy::kLeastMisery:
      return "misery";
    case GroupStrategy::kSocialInfluence:
      return "sig";
  }
  return "?";
}

IsolatedMembersError::IsolatedMembersError(std::vector<UserIndex> members)
    : std::runtime_error(describe(members)), members_(std::move(members)) {}

std::vector<UserIndex> isolated_members(const ParamSet& params, std::span<const UserIndex> group) {
  const auto& graph = *params.graph;
  std::vector<UserIndex> isolated;
  for (auto u : group) {
    bool connected = false;
    for (auto f : group) {
      if (f == u) continue;
      if (graph.slot(u, f) || graph.slot(f, u)) {
        connected = true;
        break;
      }
    }
    if (!connected) isolated.push_back(u);
  }
  return isolated;
}

double score_average(const ParamSet& params, const Corpus& corpus, std::span<const UserIndex> group,
                     ItemIndex i) {
  check_group(params, group);
  double total = 0.0;
  for (auto u : group) total += prob_item_given_user(params, corpus, u, i);
  return total / static_cast<double>(group.size());
}

double score_least_misery(const ParamSet& params, const Corpus& corpus,
                          std::span<const UserIndex> group, ItemIndex i) {
  check_group(params, group);
  double lowest = std::numeric_limits<double>::infinity();
  for (auto u : group) lowest = std::min(lowest, prob_item_given_user(params, corpus, u, i));
  return lowest;
}

double score_social_influence(const ParamSet& params, const Corpus& /*corpus*/,
                              std::span<const UserIndex> group, ItemIndex i) {
  check_group(params, group);
  require_connected(params, group);
  double total = 0.0;
  for (auto u : group) {
    for (auto f : group) {
      if (f != u && params.graph->slot(u, f)) total += pair_joint(params, u, f, i);
    }
  }
  return total;
}

std::vector<double> group_item_scores(const ParamSet& params, const Corpus& corpus,
                                      std::span<const UserIndex> group, GroupStrategy strategy) {
  check_group(params, group);
  const std::size_t m = params.num_items();
  std::vector<double> scores(m, 0.0);
  switch (strategy) {
    case GroupStrategy::kAverage: {
      for (auto u : group) {
        const auto member = item_scores(params, corpus, u);
        for (ItemIndex i = 0; i < m; ++i) scores[i] += member[i];
      }
      for (double& s : scores) s /= static_cast<double>(group.size());
      break;
    }
    case GroupStrategy::kLeastMisery: {
      std::fill(scores.begin(), scores.end(), std::numeric_limits<double>::infinity());
      for (auto u : group) {
        const auto member = item_scores(params, corpus, u);
        for (ItemIndex i = 0; i < m; ++i) scores[i] = std::min(scores[i], member[i]);
      }
      break;
    }
    case GroupStrategy::kSocialInfluence: {
      require_connected(params, group);
      for (auto u : group) {
        for (auto f : group) {
          if (f == u || !params.graph->slot(u, f)) continue;
          const double influence = params.influence_of(f, u);
          const auto g = influencer_topic_weights(params, f);
          for (ItemIndex i = 0; i < m; ++i) {
            double pair = 0.0;
            for (Topic z = 0; z < g.size(); ++z) pair += g[z] * influence * params.topic_item(z, i);
            scores[i] += pair;
          }
        }
      }
      break;
    }
  }
  return scores;
}

RankedList recommend_group(const ParamSet& params, const Corpus& corpus,
                           const std::vector<std::vector<ItemIndex>>& histories,
                           std::span<const UserIndex> group, std::size_t n,
                           GroupStrategy strategy) {
  const auto scores = group_item_scores(params, corpus, group, strategy);
  std::vector<ItemIndex> seen;
  for (auto u : group) seen.insert(seen.end(), histories.at(u).begin(), histories.at(u).end());
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  RankedList list;
  list.users.assign(group.begin(), group.end());
  list.items = rank_fresh(scores, seen, n);
  return list;
}

RankedList recommend_group(const ParamSet& params, const Corpus& corpus,
                           std::span<const Interaction> train, std::span<const UserIndex> group,
                           std::size_t n, GroupStrategy strategy) {
  return recommend_group(params, corpus, user_histories(params.num_users(), train), group, n,
                         strategy);
}

}  // namespace socialrec
