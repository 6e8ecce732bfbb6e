// Apache License, Version 2.0, refer to LICENSE.txt
//
// Ancestral sampling from a planted parameter set. Users are drawn
// uniformly; everything after that follows the generative story: u picks a
// friend f from the generative influence Pr(f|u), f picks a topic from
// Pr(z|f), the topic emits an item (and, with content, a tag).

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "socialrec/corpus.hh"
#include "socialrec/model.hh"

namespace socialrec {

struct PlantedWorldConfig {
  std::size_t users = 200;
  std::size_t items = 500;
  std::size_t tags = 50;
  std::size_t topics = 5;
  bool content = true;
  // Mean number of non-self friends; the planted graph is symmetric.
  double avg_friends = 6.0;
  // Each edge u-f carries Pr(u|f) = (1 - self_weight) / max(deg u, deg f);
  // the remainder, at least self_weight, stays on f itself.
  double self_weight = 0.2;
  // Pr(z|f) mass on each user's primary topic.
  double topic_focus = 0.85;
  // Uniform background mixed into every Pr(i|z) and Pr(w|z).
  double background = 0.05;
  std::uint64_t seed = 1;
};

struct PlantedWorld {
  ParamSet true_params;
  // Users, items, tags and the friend graph, with no interactions. Index
  // spaces match true_params; names are "u<n>", "i<n>", "t<n>".
  Corpus skeleton;

  // Mean over users of the generative influence carried by non-self friends.
  double friend_influence_mass() const;
};

PlantedWorld make_planted_world(const PlantedWorldConfig& config);

// Draws n_events events; with content on each carries a tag.
std::vector<Observation> sample_corpus(const PlantedWorld& world, std::size_t n_events,
                                       std::uint64_t seed);

struct GroupSampling {
  std::size_t max_size = 3;
  // Probability of adding one more connected member while below max_size.
  double growth = 0.93;
};

// Each event: a uniform non-self edge (u, f), an item drawn proportionally to
// pair_joint(u, f, i), then optional growth by members adjacent to the group.
std::vector<GroupEvent> sample_group_events(const PlantedWorld& world, std::size_t n_groups,
                                            std::uint64_t seed, const GroupSampling& sampling = {});

// A corpus in the world's index space whose interactions are the events and
// whose item tags are the distinct (item, tag) pairs drawn.
Corpus corpus_from_events(const PlantedWorld& world, std::span<const Observation> events);

// Moves parameters into another corpus's index space by external id. Items
// and tags absent from `to` are dropped and their rows renormalized; every
// user of `from` must exist in `to`.
ParamSet remap_params(const ParamSet& params, const Corpus& from, const Corpus& to);

}  // namespace socialrec
