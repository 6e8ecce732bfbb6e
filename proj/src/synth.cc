// Apache License, Version 2.0, refer to LICENSE.txt

#include "socialrec/synth.hh"

#include <algorithm>
#include <cmath>
#include <random>

#include "socialrec/error.hh"

namespace socialrec {

namespace {

// Inverse-CDF sampling over a fixed weight vector.
class Categorical {
 public:
  Categorical() = default;
  explicit Categorical(std::span<const double> weights) : cumulative_(weights.size()) {
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      total += weights[k];
      cumulative_[k] = total;
    }
    if (!(total > 0.0)) throw ContractViolation("categorical weights must have positive mass");
  }

  template <class Rng>
  std::size_t operator()(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, cumulative_.back());
    const double x = unit(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                 cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

std::string numbered(char prefix, std::size_t n) { return prefix + std::to_string(n); }

// Each topic owns a contiguous block of `count` entries with random weights;
// the rest of the row is background.
void fill_block_rows(TopicTable& table, double background, std::mt19937_64& rng) {
  const std::size_t k = table.rows();
  const std::size_t n = table.cols();
  if (n == 0) return;
  std::exponential_distribution<double> weight(1.0);
  for (std::size_t z = 0; z < k; ++z) {
    const std::size_t begin = z * n / k;
    const std::size_t end = std::max(begin + 1, (z + 1) * n / k);
    std::vector<double> block(end - begin);
    for (double& v : block) v = weight(rng) + 1e-3;
    normalize_distribution(block);
    for (std::size_t c = 0; c < n; ++c) table(z, c) = background / static_cast<double>(n);
    for (std::size_t c = begin; c < end && c < n; ++c) table(z, c) += (1.0 - background) * block[c - begin];
  }
  normalize_rows(table);
}

}  // namespace

double PlantedWorld::friend_influence_mass() const {
  const auto gen = derive_generative_influence(true_params);
  const auto& graph = *gen.graph;
  double total = 0.0;
  for (UserIndex u = 0; u < graph.num_users(); ++u) {
    const auto friends = graph.friends(u);
    for (std::size_t s = 0; s < friends.size(); ++s) {
      if (friends[s] != u) total += gen.values[graph.offset(u) + s];
    }
  }
  return graph.num_users() == 0 ? 0.0 : total / static_cast<double>(graph.num_users());
}

PlantedWorld make_planted_world(const PlantedWorldConfig& config) {
  if (config.users < 2 || config.items < 1 || config.topics < 1) {
    throw ContractViolation("planted world needs >= 2 users, >= 1 item and >= 1 topic");
  }
  if (config.content && config.tags < 1) throw ContractViolation("content worlds need tags");
  std::mt19937_64 rng(config.seed);
  const std::size_t n = config.users;
  const std::size_t k = config.topics;

  // Symmetric random graph: each user proposes avg_friends / 2 partners.
  std::vector<std::vector<UserIndex>> lists(n);
  const auto proposals = static_cast<std::size_t>(std::lround(config.avg_friends / 2.0));
  std::uniform_int_distribution<std::size_t> any_user(0, n - 1);
  for (UserIndex u = 0; u < n; ++u) {
    for (std::size_t p = 0; p < proposals; ++p) {
      UserIndex v = u;
      while (v == u) v = static_cast<UserIndex>(any_user(rng));
      lists[u].push_back(v);
      lists[v].push_back(u);
    }
  }
  for (UserIndex u = 0; u < n; ++u) {
    lists[u].push_back(u);
    std::sort(lists[u].begin(), lists[u].end());
    lists[u].erase(std::unique(lists[u].begin(), lists[u].end()), lists[u].end());
  }

  CorpusBuilder builder;
  for (std::size_t u = 0; u < n; ++u) builder.add_user(numbered('u', u));
  for (std::size_t i = 0; i < config.items; ++i) builder.add_item(numbered('i', i));
  if (config.content) {
    for (std::size_t w = 0; w < config.tags; ++w) builder.add_tag_name(numbered('t', w));
  }
  for (UserIndex u = 0; u < n; ++u) {
    for (auto f : lists[u]) {
      if (f != u) builder.add_friend(numbered('u', u), numbered('u', f));
    }
  }

  PlantedWorld world;
  world.skeleton = std::move(builder).build();

  ParamSet& p = world.true_params;
  p.social = true;
  p.content = config.content;
  p.seed = config.seed;
  p.graph = std::make_shared<const FriendGraph>(lists);

  // Pr(z|f) concentrated on a primary topic; Pr(f) uniform, so
  // Pr(z) Pr(f|z) = Pr(z|f) / N.
  TopicTable topic_given_user(k, n);
  std::uniform_int_distribution<std::size_t> any_topic(0, k - 1);
  for (UserIndex f = 0; f < n; ++f) {
    const auto primary = any_topic(rng);
    for (std::size_t z = 0; z < k; ++z) {
      topic_given_user(z, f) = k == 1 ? 1.0
                               : z == primary
                                   ? config.topic_focus
                                   : (1.0 - config.topic_focus) / static_cast<double>(k - 1);
    }
  }
  p.topic_prior.assign(k, 0.0);
  p.topic_user = TopicTable(k, n);
  for (std::size_t z = 0; z < k; ++z) {
    for (UserIndex f = 0; f < n; ++f) {
      p.topic_user(z, f) = topic_given_user(z, f);
      p.topic_prior[z] += topic_given_user(z, f);
    }
  }
  normalize_distribution(p.topic_prior);
  normalize_rows(p.topic_user);

  p.topic_item = TopicTable(k, config.items);
  fill_block_rows(p.topic_item, config.background, rng);
  if (config.content) {
    p.topic_tag = TopicTable(k, config.tags);
    fill_block_rows(p.topic_tag, config.background, rng);
  }

  // Pr(u|f) with Metropolis weights (1 - self_weight) / max(deg u, deg f) on
  // each edge and the remainder on f itself. The matrix is symmetric and so
  // doubly stochastic: with Pr(f) uniform the model's Pr(u) is uniform too,
  // which is how sample_corpus draws users.
  const auto& graph = *p.graph;
  std::vector<std::size_t> degree(n, 0);
  for (UserIndex u = 0; u < n; ++u) degree[u] = graph.degree(u) - 1;
  p.influence.assign(graph.num_slots(), 0.0);
  for (UserIndex u = 0; u < n; ++u) {
    const auto friends = graph.friends(u);
    double others = 0.0;
    std::size_t self_slot = 0;
    for (std::size_t s = 0; s < friends.size(); ++s) {
      const auto f = friends[s];
      if (f == u) {
        self_slot = s;
        continue;
      }
      const double value =
          (1.0 - config.self_weight) / static_cast<double>(std::max(degree[u], degree[f]));
      p.influence[graph.offset(u) + s] = value;
      others += value;
    }
    p.influence[graph.offset(u) + self_slot] = 1.0 - others;
  }
  normalize_influence(graph, p.influence);
  return world;
}

std::vector<Observation> sample_corpus(const PlantedWorld& world, std::size_t n_events,
                                       std::uint64_t seed) {
  const auto& p = world.true_params;
  const auto& graph = *p.graph;
  const std::size_t n = p.num_users();
  const std::size_t k = p.num_topics();
  const auto gen = derive_generative_influence(p);

  std::vector<Categorical> pick_friend(n);
  for (UserIndex u = 0; u < n; ++u) {
    pick_friend[u] = Categorical(
        std::span<const double>(gen.values.data() + graph.offset(u), graph.degree(u)));
  }
  std::vector<Categorical> pick_topic(n);
  for (UserIndex f = 0; f < n; ++f) {
    std::vector<double> w(k);
    for (std::size_t z = 0; z < k; ++z) w[z] = p.topic_prior[z] * p.topic_user(z, f);
    pick_topic[f] = Categorical(w);
  }
  std::vector<Categorical> pick_item(k);
  std::vector<Categorical> pick_tag(k);
  for (std::size_t z = 0; z < k; ++z) {
    pick_item[z] = Categorical(p.topic_item.row(z));
    if (p.content) pick_tag[z] = Categorical(p.topic_tag.row(z));
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> any_user(0, n - 1);
  std::vector<Observation> events;
  events.reserve(n_events);
  for (std::size_t e = 0; e < n_events; ++e) {
    Observation obs;
    obs.user = static_cast<UserIndex>(any_user(rng));
    const auto f = graph.friends(obs.user)[pick_friend[obs.user](rng)];
    const auto z = pick_topic[f](rng);
    obs.item = static_cast<ItemIndex>(pick_item[z](rng));
    if (p.content) obs.tag = static_cast<TagIndex>(pick_tag[z](rng));
    events.push_back(obs);
  }
  return events;
}

std::vector<GroupEvent> sample_group_events(const PlantedWorld& world, std::size_t n_groups,
                                            std::uint64_t seed, const GroupSampling& sampling) {
  const auto& p = world.true_params;
  const auto& graph = *p.graph;
  if (sampling.max_size < 2) throw ContractViolation("group size cap must be >= 2");

  std::vector<std::pair<UserIndex, UserIndex>> edges;
  for (UserIndex u = 0; u < graph.num_users(); ++u) {
    for (auto f : graph.friends(u)) {
      if (f != u) edges.emplace_back(u, f);
    }
  }
  if (edges.empty()) throw ContractViolation("friend graph has no non-self edge");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> any_edge(0, edges.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> weights(p.num_items());
  std::vector<GroupEvent> events;
  events.reserve(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    const auto [u, f] = edges[any_edge(rng)];
    for (ItemIndex i = 0; i < weights.size(); ++i) weights[i] = pair_joint(p, u, f, i);
    GroupEvent event;
    event.item = static_cast<ItemIndex>(Categorical(weights)(rng));
    event.members = {u, f};
    while (event.members.size() < sampling.max_size && unit(rng) < sampling.growth) {
      std::vector<UserIndex> candidates;
      for (auto m : event.members) {
        for (auto v : graph.friends(m)) candidates.push_back(v);
      }
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      std::erase_if(candidates, [&](UserIndex v) {
        return std::find(event.members.begin(), event.members.end(), v) != event.members.end();
      });
      if (candidates.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      event.members.push_back(candidates[pick(rng)]);
    }
    std::sort(event.members.begin(), event.members.end());
    events.push_back(std::move(event));
  }
  return events;
}

Corpus corpus_from_events(const PlantedWorld& world, std::span<const Observation> events) {
  const auto& skeleton = world.skeleton;
  CorpusBuilder builder;
  for (UserIndex u = 0; u < skeleton.num_users(); ++u) builder.add_user(skeleton.users().name(u));
  for (ItemIndex i = 0; i < skeleton.num_items(); ++i) builder.add_item(skeleton.items().name(i));
  for (TagIndex w = 0; w < skeleton.num_tags(); ++w) builder.add_tag_name(skeleton.tags().name(w));
  for (UserIndex u = 0; u < skeleton.num_users(); ++u) {
    for (auto f : skeleton.friends(u)) {
      if (f != u) builder.add_friend(skeleton.users().name(u), skeleton.users().name(f));
    }
  }
  for (const auto& e : events) {
    builder.add_interaction(skeleton.users().name(e.user), skeleton.items().name(e.item));
    if (e.has_tag()) builder.add_tag(skeleton.items().name(e.item), skeleton.tags().name(e.tag));
  }
  return std::move(builder).build();
}

ParamSet remap_params(const ParamSet& params, const Corpus& from, const Corpus& to) {
  const auto& graph = *params.graph;
  const std::size_t k = params.num_topics();

  std::vector<UserIndex> user_from(to.num_users());
  std::vector<UserIndex> user_to(from.num_users());
  for (UserIndex u = 0; u < to.num_users(); ++u) {
    const auto src = from.users().find(to.users().name(u));
    if (!src) throw DataError("user '" + to.users().name(u) + "' is unknown to the model");
    user_from[u] = *src;
  }
  if (to.num_users() != from.num_users()) {
    throw DataError("corpora disagree on the user set");
  }
  for (UserIndex u = 0; u < to.num_users(); ++u) user_to[user_from[u]] = u;

  ParamSet out;
  out.social = params.social;
  out.content = params.content;
  out.seed = params.seed;
  out.topic_prior = params.topic_prior;

  std::vector<std::vector<UserIndex>> lists(to.num_users());
  std::vector<std::vector<std::pair<UserIndex, double>>> rows(to.num_users());
  for (UserIndex u = 0; u < to.num_users(); ++u) {
    const auto src = user_from[u];
    const auto friends = graph.friends(src);
    for (std::size_t s = 0; s < friends.size(); ++s) {
      rows[u].emplace_back(user_to[friends[s]], params.influence[graph.offset(src) + s]);
    }
    std::sort(rows[u].begin(), rows[u].end());
    for (const auto& [f, value] : rows[u]) lists[u].push_back(f);
  }
  out.graph = std::make_shared<const FriendGraph>(lists);
  for (const auto& row : rows) {
    for (const auto& [f, value] : row) out.influence.push_back(value);
  }

  out.topic_user = TopicTable(k, to.num_users());
  for (std::size_t z = 0; z < k; ++z) {
    for (UserIndex u = 0; u < to.num_users(); ++u) out.topic_user(z, u) = params.topic_user(z, user_from[u]);
  }

  auto remap_columns = [&](const TopicTable& table, const Interner& src, const Interner& dst,
                           const char* what) {
    TopicTable result(k, dst.size());
    for (std::uint32_t c = 0; c < dst.size(); ++c) {
      const auto s = src.find(dst.name(c));
      if (!s) throw DataError(std::string(what) + " '" + dst.name(c) + "' is unknown to the model");
      for (std::size_t z = 0; z < k; ++z) result(z, c) = table(z, *s);
    }
    normalize_rows(result);
    return result;
  };
  out.topic_item = remap_columns(params.topic_item, from.items(), to.items(), "item");
  if (params.content) out.topic_tag = remap_columns(params.topic_tag, from.tags(), to.tags(), "tag");
  return out;
}

}  // namespace socialrec
