// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include "oracles.hh"
#include "socialrec/error.hh"
#include "socialrec/recommender.hh"

using namespace socialrec;

namespace {

Corpus plain_corpus(std::size_t users, std::size_t items) {
  CorpusBuilder b;
  for (std::size_t u = 0; u < users; ++u) b.add_user("u" + std::to_string(u));
  for (std::size_t i = 0; i < items; ++i) b.add_item("i" + std::to_string(i));
  return std::move(b).build();
}

}  // namespace

TEST_CASE("top-n skips trained items") {
  ParamSet p;
  p.graph = std::make_shared<const FriendGraph>(std::vector<std::vector<UserIndex>>{{0}});
  p.topic_prior = {1.0};
  p.influence = {1.0};
  p.topic_user = TopicTable(1, 1, 1.0);
  p.topic_item = TopicTable(1, 3);
  p.topic_item(0, 0) = 0.7;
  p.topic_item(0, 1) = 0.2;
  p.topic_item(0, 2) = 0.1;
  const auto c = plain_corpus(1, 3);
  const std::vector<Interaction> train{{0, 0}};
  const auto list = recommend_top_n(p, c, train, 0, 2);
  REQUIRE(list.items.size() == 2);
  CHECK(list.items[0].item == 1);
  CHECK(list.items[1].item == 2);
  CHECK(list.items[0].score == doctest::Approx(0.2));
  CHECK(list.users == std::vector<UserIndex>{0});

  // asking for more than remain returns all fresh items
  CHECK(recommend_top_n(p, c, train, 0, 10).items.size() == 2);
  CHECK_THROWS_AS(recommend_top_n(p, c, train, 0, 0), ContractViolation);
  CHECK_THROWS_AS(recommend_top_n(p, c, train, 5, 1), ContractViolation);
}

TEST_CASE("ties break by item index") {
  const std::vector<double> scores{0.5, 0.9, 0.5, 0.5};
  const std::vector<ItemIndex> excluded{2};
  const auto ranked = rank_fresh(scores, excluded, 0);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].item == 1);
  CHECK(ranked[1].item == 0);
  CHECK(ranked[2].item == 3);
}

TEST_CASE("ranking equals the order of enumerated scores") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 40; ++trial) {
    oracle::Shape shape;
    shape.users = 5;
    shape.items = 15;
    shape.max_friends = 4;
    const auto p = oracle::random_params(rng, shape);
    const auto c = plain_corpus(shape.users, shape.items);
    std::vector<Interaction> train;
    std::bernoulli_distribution coin(0.3);
    for (UserIndex u = 0; u < shape.users; ++u) {
      for (ItemIndex i = 0; i < shape.items; ++i) {
        if (coin(rng)) train.push_back({u, i});
      }
    }
    const auto histories = user_histories(shape.users, train);
    for (UserIndex u = 0; u < shape.users; ++u) {
      std::vector<std::pair<double, ItemIndex>> expected;
      for (ItemIndex i = 0; i < shape.items; ++i) {
        if (std::binary_search(histories[u].begin(), histories[u].end(), i)) continue;
        expected.emplace_back(-oracle::item_score(p, {}, u, i), i);
      }
      std::sort(expected.begin(), expected.end());
      const auto n = std::min<std::size_t>(kDefaultTopN, expected.size());
      if (n == 0) continue;
      const auto list = recommend_top_n(p, c, train, u, n);
      REQUIRE(list.items.size() == n);
      for (std::size_t r = 0; r < n; ++r) {
        CHECK(list.items[r].item == expected[r].second);
        CHECK(list.items[r].score == doctest::Approx(-expected[r].first).epsilon(1e-12));
      }
      const auto via_history = recommend_top_n(p, c, std::span<const ItemIndex>(histories[u]), u, n);
      for (std::size_t r = 0; r < n; ++r) CHECK(via_history.items[r].item == list.items[r].item);
    }
  }
}
