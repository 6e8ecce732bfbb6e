// Apache License, Version 2.0, refer to LICENSE.txt

#include "socialrec/model.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "socialrec/error.hh"

namespace socialrec {

void ModelConfig::validate() const {
  if (topics < 1) throw ContractViolation("topic count must be >= 1");
  if (!(epsilon > 0.0)) throw ContractViolation("epsilon must be > 0");
  if (max_iters < 1) throw ContractViolation("max_iters must be >= 1");
}

ModelConfig config_for_variant(const std::string& variant) {
  ModelConfig config;
  if (variant == "cf") {
    config.social = false;
    config.content = false;
  } else if (variant == "cf+si") {
    config.social = true;
    config.content = false;
  } else if (variant == "cf+ic") {
    config.social = false;
    config.content = true;
  } else if (variant == "cf+si+ic") {
    config.social = true;
    config.content = true;
  } else {
    throw ContractViolation("unknown model variant '" + variant + "'");
  }
  return config;
}

std::string variant_name(const ModelConfig& config) {
  std::string name = "cf";
  if (config.social) name += "+si";
  if (config.content) name += "+ic";
  return name;
}

FriendGraph::FriendGraph(const std::vector<std::vector<UserIndex>>& lists) {
  offsets_.reserve(lists.size() + 1);
  offsets_.push_back(0);
  for (UserIndex u = 0; u < lists.size(); ++u) {
    const auto& list = lists[u];
    if (!std::is_sorted(list.begin(), list.end()) ||
        std::adjacent_find(list.begin(), list.end()) != list.end() ||
        !std::binary_search(list.begin(), list.end(), u)) {
      throw ContractViolation("friend list of user " + std::to_string(u) +
                              " must be sorted, distinct and contain the user");
    }
    for (auto f : list) {
      if (f >= lists.size()) throw ContractViolation("friend index out of range");
    }
    friends_.insert(friends_.end(), list.begin(), list.end());
    offsets_.push_back(friends_.size());
  }
}

FriendGraph FriendGraph::from_corpus(const Corpus& corpus, bool social) {
  std::vector<std::vector<UserIndex>> lists(corpus.num_users());
  for (UserIndex u = 0; u < corpus.num_users(); ++u) {
    if (social) {
      const auto f = corpus.friends(u);
      lists[u].assign(f.begin(), f.end());
    } else {
      lists[u] = {u};
    }
  }
  return FriendGraph(lists);
}

std::optional<std::size_t> FriendGraph::slot(UserIndex u, UserIndex f) const {
  const auto list = friends(u);
  auto it = std::lower_bound(list.begin(), list.end(), f);
  if (it == list.end() || *it != f) return std::nullopt;
  return static_cast<std::size_t>(it - list.begin());
}

double ParamSet::influence_of(UserIndex f, UserIndex u) const {
  const auto s = graph->slot(u, f);
  if (!s) {
    throw ContractViolation("user " + std::to_string(f) + " is not in F(" + std::to_string(u) +
                            ")");
  }
  return influence[graph->offset(u) + *s];
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  const bool same_graph = (a.graph == b.graph) || (a.graph && b.graph && *a.graph == *b.graph);
  return a.social == b.social && a.content == b.content && a.seed == b.seed && same_graph &&
         a.topic_prior == b.topic_prior && a.influence == b.influence &&
         a.topic_user == b.topic_user && a.topic_item == b.topic_item &&
         a.topic_tag == b.topic_tag;
}

std::size_t normalize_distribution(std::span<double> values) {
  double total = 0.0;
  for (double v : values) total += v;
  if (!(total > 0.0)) {
    const double uniform = values.empty() ? 0.0 : 1.0 / static_cast<double>(values.size());
    std::fill(values.begin(), values.end(), uniform);
    return 1;
  }
  for (double& v : values) v /= total;
  return 0;
}

std::size_t normalize_rows(TopicTable& table) {
  std::size_t fallbacks = 0;
  if (table.cols() == 0) return 0;
  for (std::size_t z = 0; z < table.rows(); ++z) fallbacks += normalize_distribution(table.row(z));
  return fallbacks;
}

std::size_t normalize_influence(const FriendGraph& graph, std::span<double> values) {
  const auto n = graph.num_users();
  std::vector<double> totals(n, 0.0);
  std::vector<std::size_t> group_size(n, 0);
  for (UserIndex u = 0; u < n; ++u) {
    const auto friends = graph.friends(u);
    const auto base = graph.offset(u);
    for (std::size_t s = 0; s < friends.size(); ++s) {
      totals[friends[s]] += values[base + s];
      ++group_size[friends[s]];
    }
  }
  std::size_t fallbacks = 0;
  for (UserIndex f = 0; f < n; ++f) {
    if (!(totals[f] > 0.0)) ++fallbacks;
  }
  for (UserIndex u = 0; u < n; ++u) {
    const auto friends = graph.friends(u);
    const auto base = graph.offset(u);
    for (std::size_t s = 0; s < friends.size(); ++s) {
      const auto f = friends[s];
      if (totals[f] > 0.0) {
        values[base + s] /= totals[f];
      } else {
        values[base + s] = 1.0 / static_cast<double>(group_size[f]);
      }
    }
  }
  return fallbacks;
}

double normalization_error(const ParamSet& params) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double worst = 0.0;
  auto check_entries = [&](std::span<const double> values) {
    for (double v : values) {
      if (!std::isfinite(v) || v < 0.0) worst = kInf;
    }
  };
  auto check_sum = [&](std::span<const double> values) {
    check_entries(values);
    double total = 0.0;
    for (double v : values) total += v;
    worst = std::max(worst, std::abs(total - 1.0));
  };
  check_sum(params.topic_prior);
  for (const auto* table : {&params.topic_user, &params.topic_item, &params.topic_tag}) {
    if (table->cols() == 0) continue;
    for (std::size_t z = 0; z < table->rows(); ++z) check_sum(table->row(z));
  }
  check_entries(params.influence);
  const auto& graph = *params.graph;
  std::vector<double> totals(graph.num_users(), 0.0);
  for (UserIndex u = 0; u < graph.num_users(); ++u) {
    const auto friends = graph.friends(u);
    for (std::size_t s = 0; s < friends.size(); ++s) {
      totals[friends[s]] += params.influence[graph.offset(u) + s];
    }
  }
  for (double t : totals) worst = std::max(worst, std::abs(t - 1.0));
  return worst;
}

double jaccard(std::span<const ItemIndex> a, std::span<const ItemIndex> b) {
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const auto total = a.size() + b.size() - common;
  if (total == 0) return 0.0;
  return static_cast<double>(common) / static_cast<double>(total);
}

ParamSet init_params(const ModelConfig& config, const Corpus& corpus,
                     std::span<const Interaction> train) {
  config.validate();
  if (corpus.num_users() == 0 || corpus.num_items() == 0) {
    throw ContractViolation("cannot initialize parameters on an empty corpus");
  }
  const std::size_t k = config.topics;

  ParamSet params;
  params.social = config.social;
  params.content = config.content;
  params.seed = config.seed;
  params.graph = std::make_shared<const FriendGraph>(FriendGraph::from_corpus(corpus, config.social));

  params.topic_prior.assign(k, 1.0 / static_cast<double>(k));

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> positive(1.0, 2.0);
  auto fill_random = [&](TopicTable& table) {
    for (double& v : table.data()) v = positive(rng);
    normalize_rows(table);
  };
  params.topic_user = TopicTable(k, corpus.num_users());
  params.topic_item = TopicTable(k, corpus.num_items());
  fill_random(params.topic_user);
  fill_random(params.topic_item);
  if (config.content) {
    params.topic_tag = TopicTable(k, corpus.num_tags());
    fill_random(params.topic_tag);
  }

  std::vector<std::vector<ItemIndex>> history(corpus.num_users());
  for (const auto& x : train) history[x.user].push_back(x.item);
  for (auto& h : history) {
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
  }

  const auto& graph = *params.graph;
  params.influence.assign(graph.num_slots(), 0.0);
  for (UserIndex u = 0; u < graph.num_users(); ++u) {
    const auto friends = graph.friends(u);
    for (std::size_t s = 0; s < friends.size(); ++s) {
      params.influence[graph.offset(u) + s] = jaccard(history[u], history[friends[s]]);
    }
  }
  normalize_influence(graph, params.influence);
  return params;
}

namespace {

void check_user(const ParamSet& params, UserIndex u) {
  if (u >= params.num_users()) throw ContractViolation("user index out of range");
}

void check_item(const ParamSet& params, ItemIndex i) {
  if (i >= params.num_items()) throw ContractViolation("item index out of range");
}

}  // namespace

double joint_prob(const ParamSet& params, UserIndex u, UserIndex f, Topic z, ItemIndex i,
                  TagIndex w) {
  check_user(params, u);
  check_item(params, i);
  if (params.content != (w != kNoTag)) {
    throw ContractViolation("a tag must be supplied exactly when the content factor is on");
  }
  const double base =
      params.topic_prior[z] * params.influence_of(f, u) * params.topic_user(z, f) *
      params.topic_item(z, i);
  return params.content ? base * params.topic_tag(z, w) : base;
}

namespace {

// sum_{f in F(u)} Pr(z) Pr(u|f) Pr(f|z), per topic.
std::vector<double> user_topic_weights(const ParamSet& params, UserIndex u) {
  const auto& graph = *params.graph;
  const auto friends = graph.friends(u);
  const auto base = graph.offset(u);
  std::vector<double> g(params.num_topics(), 0.0);
  for (Topic z = 0; z < g.size(); ++z) {
    double acc = 0.0;
    for (std::size_t s = 0; s < friends.size(); ++s) {
      acc += params.influence[base + s] * params.topic_user(z, friends[s]);
    }
    g[z] = params.topic_prior[z] * acc;
  }
  return g;
}

double tag_mass(const ParamSet& params, const Corpus& corpus, Topic z, ItemIndex i) {
  double total = 0.0;
  for (auto w : corpus.item_tags(i)) total += params.topic_tag(z, w);
  return total;
}

}  // namespace

double prob_item_given_user(const ParamSet& params, const Corpus& corpus, UserIndex u,
                            ItemIndex i) {
  check_user(params, u);
  check_item(params, i);
  const auto g = user_topic_weights(params, u);
  double score = 0.0;
  for (Topic z = 0; z < g.size(); ++z) {
    double term = g[z] * params.topic_item(z, i);
    if (params.content) term *= tag_mass(params, corpus, z, i);
    score += term;
  }
  return score;
}

std::vector<double> item_scores(const ParamSet& params, const Corpus& corpus, UserIndex u) {
  check_user(params, u);
  const auto g = user_topic_weights(params, u);
  std::vector<double> scores(params.num_items(), 0.0);
  for (ItemIndex i = 0; i < scores.size(); ++i) {
    double score = 0.0;
    for (Topic z = 0; z < g.size(); ++z) {
      double term = g[z] * params.topic_item(z, i);
      if (params.content) term *= tag_mass(params, corpus, z, i);
      score += term;
    }
    scores[i] = score;
  }
  return scores;
}

double pair_joint(const ParamSet& params, UserIndex u, UserIndex f, ItemIndex i) {
  check_user(params, u);
  check_item(params, i);
  if (u == f) throw ContractViolation("pair_joint requires two distinct users");
  const double influence = params.influence_of(f, u);
  double total = 0.0;
  for (Topic z = 0; z < params.num_topics(); ++z) {
    total += params.topic_prior[z] * influence * params.topic_user(z, f) * params.topic_item(z, i);
  }
  return total;
}

double observation_prob(const ParamSet& params, const Observation& obs) {
  const auto& graph = *params.graph;
  const auto friends = graph.friends(obs.user);
  const auto base = graph.offset(obs.user);
  double total = 0.0;
  for (Topic z = 0; z < params.num_topics(); ++z) {
    double topic_factor = params.topic_prior[z] * params.topic_item(z, obs.item);
    if (params.content) topic_factor *= params.topic_tag(z, obs.tag);
    double friend_sum = 0.0;
    for (std::size_t s = 0; s < friends.size(); ++s) {
      friend_sum += params.influence[base + s] * params.topic_user(z, friends[s]);
    }
    total += topic_factor * friend_sum;
  }
  return total;
}

double log_likelihood(const ParamSet& params, std::span<const Observation> observations) {
  double ll = 0.0;
  for (const auto& obs : observations) {
    ll += std::log(std::max(observation_prob(params, obs), kLogClamp));
  }
  return ll;
}

GenerativeInfluence derive_generative_influence(const ParamSet& params) {
  GenerativeInfluence out;
  out.graph = params.graph;
  const auto& graph = *params.graph;
  out.values.assign(graph.num_slots(), 0.0);

  // Pr(f) up to the shared factor: sum_z Pr(z) Pr(f|z).
  std::vector<double> friend_mass(params.num_users(), 0.0);
  for (UserIndex f = 0; f < params.num_users(); ++f) {
    for (Topic z = 0; z < params.num_topics(); ++z) {
      friend_mass[f] += params.topic_prior[z] * params.topic_user(z, f);
    }
  }
  for (UserIndex u = 0; u < graph.num_users(); ++u) {
    const auto friends = graph.friends(u);
    std::span<double> row(out.values.data() + graph.offset(u), friends.size());
    for (std::size_t s = 0; s < friends.size(); ++s) {
      row[s] = params.influence[graph.offset(u) + s] * friend_mass[friends[s]];
    }
    if (normalize_distribution(row) > 0) out.uniform_fallback.push_back(u);
  }
  return out;
}

}  // namespace socialrec
