// Apache License, Version 2.0, refer to LICENSE.txt
//
// Slow, independent recomputations used as test oracles. Nothing here calls
// the library's scoring, E-step or M-step code; parameters are read straight
// out of the tables and friend lists.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "socialrec/corpus.hh"
#include "socialrec/em.hh"
#include "socialrec/model.hh"

namespace oracle {

using namespace socialrec;

struct Shape {
  std::size_t users = 3;
  std::size_t items = 4;
  std::size_t tags = 3;
  std::size_t topics = 2;
  std::size_t max_friends = 3;  // |F(u)| including u
  bool social = true;
  bool content = false;
};

inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> draw(0.05, 1.0);
  std::vector<double> v(n);
  double total = 0.0;
  for (double& x : v) total += (x = draw(rng));
  for (double& x : v) x /= total;
  return v;
}

inline std::vector<std::vector<UserIndex>> random_friend_lists(std::mt19937_64& rng,
                                                               std::size_t users,
                                                               std::size_t max_friends,
                                                               bool social) {
  std::vector<std::vector<UserIndex>> lists(users);
  for (UserIndex u = 0; u < users; ++u) {
    lists[u] = {u};
    if (!social) continue;
    std::vector<UserIndex> others;
    for (UserIndex v = 0; v < users; ++v) {
      if (v != u) others.push_back(v);
    }
    std::shuffle(others.begin(), others.end(), rng);
    std::uniform_int_distribution<std::size_t> extra(0, std::min(max_friends - 1, others.size()));
    others.resize(extra(rng));
    lists[u].insert(lists[u].end(), others.begin(), others.end());
    std::sort(lists[u].begin(), lists[u].end());
  }
  return lists;
}

// Random strictly positive parameters with every family normalized.
inline ParamSet random_params(std::mt19937_64& rng, const Shape& shape) {
  ParamSet p;
  p.social = shape.social;
  p.content = shape.content;
  p.seed = rng();
  const auto lists = random_friend_lists(rng, shape.users, shape.max_friends, shape.social);
  p.graph = std::make_shared<const FriendGraph>(lists);
  const std::size_t k = shape.topics;
  p.topic_prior = random_distribution(rng, k);
  auto table = [&](std::size_t cols) {
    TopicTable t(k, cols);
    for (std::size_t z = 0; z < k; ++z) {
      const auto row = random_distribution(rng, cols);
      std::copy(row.begin(), row.end(), t.row(z).begin());
    }
    return t;
  };
  p.topic_user = table(shape.users);
  p.topic_item = table(shape.items);
  if (shape.content) p.topic_tag = table(shape.tags);

  // Pr(u|f): for each f, a random distribution over its followers.
  std::vector<std::vector<UserIndex>> followers(shape.users);
  for (UserIndex u = 0; u < shape.users; ++u) {
    for (auto f : lists[u]) followers[f].push_back(u);
  }
  p.influence.assign(p.graph->num_slots(), 0.0);
  for (UserIndex f = 0; f < shape.users; ++f) {
    const auto dist = random_distribution(rng, followers[f].size());
    for (std::size_t k2 = 0; k2 < followers[f].size(); ++k2) {
      const auto u = followers[f][k2];
      const auto& list = lists[u];
      const auto pos = std::find(list.begin(), list.end(), f) - list.begin();
      p.influence[p.graph->offset(u) + static_cast<std::size_t>(pos)] = dist[k2];
    }
  }
  return p;
}

inline std::vector<Observation> random_observations(std::mt19937_64& rng, const ParamSet& p,
                                                    std::size_t n) {
  std::uniform_int_distribution<UserIndex> user(0, static_cast<UserIndex>(p.num_users() - 1));
  std::uniform_int_distribution<ItemIndex> item(0, static_cast<ItemIndex>(p.num_items() - 1));
  std::vector<Observation> obs(n);
  for (auto& o : obs) {
    o.user = user(rng);
    o.item = item(rng);
    if (p.content) {
      std::uniform_int_distribution<TagIndex> tag(0, static_cast<TagIndex>(p.num_tags() - 1));
      o.tag = tag(rng);
    }
  }
  return obs;
}

inline std::vector<UserIndex> friends_of(const ParamSet& p, UserIndex u) {
  const auto span = p.graph->friends(u);
  return {span.begin(), span.end()};
}

// Pr(u|f) by linear scan; 0 when f is not in F(u).
inline double influence(const ParamSet& p, UserIndex f, UserIndex u) {
  const auto list = friends_of(p, u);
  for (std::size_t s = 0; s < list.size(); ++s) {
    if (list[s] == f) return p.influence[p.graph->offset(u) + s];
  }
  return 0.0;
}

inline double joint(const ParamSet& p, UserIndex u, UserIndex f, std::size_t z, ItemIndex i,
                    TagIndex w) {
  double v = p.topic_prior[z] * influence(p, f, u) * p.topic_user(z, f) * p.topic_item(z, i);
  if (p.content) v *= p.topic_tag(z, w);
  return v;
}

// posterior[z][s] for s indexing F(u), normalized by direct enumeration.
inline std::vector<std::vector<double>> posterior(const ParamSet& p, const Observation& obs) {
  const auto list = friends_of(p, obs.user);
  std::vector<std::vector<double>> post(p.num_topics(), std::vector<double>(list.size()));
  double total = 0.0;
  for (std::size_t z = 0; z < p.num_topics(); ++z) {
    for (std::size_t s = 0; s < list.size(); ++s) {
      post[z][s] = joint(p, obs.user, list[s], z, obs.item, obs.tag);
      total += post[z][s];
    }
  }
  for (auto& row : post) {
    for (double& v : row) v /= total;
  }
  return post;
}

inline double evidence(const ParamSet& p, const Observation& obs) {
  double total = 0.0;
  for (std::size_t z = 0; z < p.num_topics(); ++z) {
    for (auto f : friends_of(p, obs.user)) total += joint(p, obs.user, f, z, obs.item, obs.tag);
  }
  return total;
}

inline double log_likelihood(const ParamSet& p, const std::vector<Observation>& obs) {
  double ll = 0.0;
  for (const auto& o : obs) ll += std::log(std::max(evidence(p, o), 1e-300));
  return ll;
}

// One EM iteration written out step by step: enumerate posteriors, add them
// into keyed maps, smooth every cell, normalize each family on its own axis.
inline ParamSet reference_iteration(const ParamSet& p, const std::vector<Observation>& obs,
                                    double smoothing = kSmoothing) {
  const std::size_t k = p.num_topics();
  std::map<std::size_t, double> prior;
  std::map<std::pair<std::size_t, UserIndex>, double> user;
  std::map<std::pair<std::size_t, ItemIndex>, double> item;
  std::map<std::pair<std::size_t, TagIndex>, double> tag;
  std::map<std::pair<UserIndex, UserIndex>, double> infl;  // (f, u)
  for (const auto& o : obs) {
    const auto post = posterior(p, o);
    const auto list = friends_of(p, o.user);
    for (std::size_t z = 0; z < k; ++z) {
      for (std::size_t s = 0; s < list.size(); ++s) {
        const double q = post[z][s];
        prior[z] += q;
        user[{z, list[s]}] += q;
        item[{z, o.item}] += q;
        if (p.content) tag[{z, o.tag}] += q;
        infl[{list[s], o.user}] += q;
      }
    }
  }

  ParamSet next = p;
  double prior_total = 0.0;
  for (std::size_t z = 0; z < k; ++z) prior_total += prior[z] + smoothing;
  for (std::size_t z = 0; z < k; ++z) next.topic_prior[z] = (prior[z] + smoothing) / prior_total;

  auto fill = [&](TopicTable& t, auto& sums) {
    for (std::size_t z = 0; z < k; ++z) {
      double total = 0.0;
      for (std::size_t c = 0; c < t.cols(); ++c) total += sums[{z, static_cast<std::uint32_t>(c)}] + smoothing;
      for (std::size_t c = 0; c < t.cols(); ++c) {
        t(z, c) = (sums[{z, static_cast<std::uint32_t>(c)}] + smoothing) / total;
      }
    }
  };
  fill(next.topic_user, user);
  fill(next.topic_item, item);
  if (p.content) fill(next.topic_tag, tag);

  const std::size_t n = p.num_users();
  std::vector<double> per_f(n, 0.0);
  for (UserIndex u = 0; u < n; ++u) {
    for (auto f : friends_of(p, u)) per_f[f] += infl[{f, u}] + smoothing;
  }
  for (UserIndex u = 0; u < n; ++u) {
    const auto list = friends_of(p, u);
    for (std::size_t s = 0; s < list.size(); ++s) {
      next.influence[p.graph->offset(u) + s] = (infl[{list[s], u}] + smoothing) / per_f[list[s]];
    }
  }
  return next;
}

// Sum of posteriors without smoothing or normalization.
struct RawSums {
  std::vector<double> prior;
  std::map<std::pair<std::size_t, UserIndex>, double> user;
  std::map<std::pair<std::size_t, ItemIndex>, double> item;
  std::map<std::pair<std::size_t, TagIndex>, double> tag;
  std::map<std::pair<UserIndex, UserIndex>, double> infl;  // (u, f)
};

inline RawSums raw_sums(const ParamSet& p, const std::vector<Observation>& obs) {
  RawSums r;
  r.prior.assign(p.num_topics(), 0.0);
  for (const auto& o : obs) {
    const auto post = posterior(p, o);
    const auto list = friends_of(p, o.user);
    for (std::size_t z = 0; z < p.num_topics(); ++z) {
      for (std::size_t s = 0; s < list.size(); ++s) {
        r.prior[z] += post[z][s];
        r.user[{z, list[s]}] += post[z][s];
        r.item[{z, o.item}] += post[z][s];
        if (p.content) r.tag[{z, o.tag}] += post[z][s];
        r.infl[{o.user, list[s]}] += post[z][s];
      }
    }
  }
  return r;
}

// Score of item i for user u: enumeration over z, f in F(u) and w in tags.
inline double item_score(const ParamSet& p, const std::vector<TagIndex>& tags, UserIndex u,
                         ItemIndex i) {
  double total = 0.0;
  for (std::size_t z = 0; z < p.num_topics(); ++z) {
    for (auto f : friends_of(p, u)) {
      if (!p.content) {
        total += joint(p, u, f, z, i, kNoTag);
        continue;
      }
      for (auto w : tags) total += joint(p, u, f, z, i, w);
    }
  }
  return total;
}

inline double pair_joint(const ParamSet& p, UserIndex u, UserIndex f, ItemIndex i) {
  double total = 0.0;
  for (std::size_t z = 0; z < p.num_topics(); ++z) {
    total += p.topic_prior[z] * influence(p, f, u) * p.topic_user(z, f) * p.topic_item(z, i);
  }
  return total;
}

// Pr(f|u) by Bayes over the full joint: Pr(u,f) / sum_f' Pr(u,f'), with the
// item (and tag) marginalized by explicit summation.
inline std::vector<double> generative_influence(const ParamSet& p, UserIndex u) {
  const auto list = friends_of(p, u);
  std::vector<double> row(list.size(), 0.0);
  for (std::size_t s = 0; s < list.size(); ++s) {
    for (std::size_t z = 0; z < p.num_topics(); ++z) {
      for (ItemIndex i = 0; i < p.num_items(); ++i) {
        if (!p.content) {
          row[s] += joint(p, u, list[s], z, i, kNoTag);
          continue;
        }
        for (TagIndex w = 0; w < p.num_tags(); ++w) row[s] += joint(p, u, list[s], z, i, w);
      }
    }
  }
  double total = 0.0;
  for (double v : row) total += v;
  for (double& v : row) v /= total;
  return row;
}

// The plain aspect model Pr(u,i) = sum_z Pr(z) Pr(u|z) Pr(i|z), trained by EM
// on dense arrays with the same smoothing rule.
struct AspectModel {
  std::vector<double> pz;
  std::vector<std::vector<double>> pu;  // [z][u]
  std::vector<std::vector<double>> pi;  // [z][i]

  static AspectModel from(const ParamSet& p) {
    AspectModel m;
    m.pz = p.topic_prior;
    for (std::size_t z = 0; z < p.num_topics(); ++z) {
      m.pu.emplace_back(p.topic_user.row(z).begin(), p.topic_user.row(z).end());
      m.pi.emplace_back(p.topic_item.row(z).begin(), p.topic_item.row(z).end());
    }
    return m;
  }

  double log_likelihood(const std::vector<Observation>& obs) const {
    double ll = 0.0;
    for (const auto& o : obs) {
      double pr = 0.0;
      for (std::size_t z = 0; z < pz.size(); ++z) pr += pz[z] * pu[z][o.user] * pi[z][o.item];
      ll += std::log(std::max(pr, 1e-300));
    }
    return ll;
  }

  AspectModel step(const std::vector<Observation>& obs, double smoothing = kSmoothing) const {
    const std::size_t k = pz.size();
    AspectModel next;
    next.pz.assign(k, 0.0);
    next.pu.assign(k, std::vector<double>(pu[0].size(), 0.0));
    next.pi.assign(k, std::vector<double>(pi[0].size(), 0.0));
    std::vector<double> q(k);
    for (const auto& o : obs) {
      double total = 0.0;
      for (std::size_t z = 0; z < k; ++z) total += q[z] = pz[z] * pu[z][o.user] * pi[z][o.item];
      for (std::size_t z = 0; z < k; ++z) {
        next.pz[z] += q[z] / total;
        next.pu[z][o.user] += q[z] / total;
        next.pi[z][o.item] += q[z] / total;
      }
    }
    auto smooth_normalize = [&](std::vector<double>& v) {
      double total = 0.0;
      for (double& x : v) total += (x += smoothing);
      for (double& x : v) x /= total;
    };
    smooth_normalize(next.pz);
    for (auto& row : next.pu) smooth_normalize(row);
    for (auto& row : next.pi) smooth_normalize(row);
    return next;
  }
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

inline double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), 1e-300});
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

// Largest per-parameter deviation across all five families.
inline double param_diff(const ParamSet& a, const ParamSet& b, bool relative = false) {
  auto d = [&](std::span<const double> x, std::span<const double> y) {
    return relative ? max_rel_diff(x, y) : max_abs_diff(x, y);
  };
  return std::max({d(a.topic_prior, b.topic_prior), d(a.influence, b.influence),
                   d(a.topic_user.data(), b.topic_user.data()),
                   d(a.topic_item.data(), b.topic_item.data()),
                   d(a.topic_tag.data(), b.topic_tag.data())});
}

// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("socialrec-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
