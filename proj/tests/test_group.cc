// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include "oracles.hh"
#include "socialrec/error.hh"
#include "socialrec/group.hh"

using namespace socialrec;

namespace {

Corpus plain_corpus(std::size_t users, std::size_t items) {
  CorpusBuilder b;
  for (std::size_t u = 0; u < users; ++u) b.add_user("u" + std::to_string(u));
  for (std::size_t i = 0; i < items; ++i) b.add_item("i" + std::to_string(i));
  return std::move(b).build();
}

// K = 1 and F(u) = {u}: each user's score for item i is Pr(u|z) Pr(i|z), so
// per-user scores are set directly through Pr(i|z) and Pr(u|z).
ParamSet solo_users(std::vector<double> user_weights, std::vector<double> items) {
  ParamSet p;
  std::vector<std::vector<UserIndex>> lists;
  for (UserIndex u = 0; u < user_weights.size(); ++u) lists.push_back({u});
  p.graph = std::make_shared<const FriendGraph>(lists);
  p.topic_prior = {1.0};
  p.influence.assign(user_weights.size(), 1.0);
  p.topic_user = TopicTable(1, user_weights.size());
  for (std::size_t u = 0; u < user_weights.size(); ++u) p.topic_user(0, u) = user_weights[u];
  p.topic_item = TopicTable(1, items.size());
  for (std::size_t i = 0; i < items.size(); ++i) p.topic_item(0, i) = items[i];
  return p;
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(parse_group_strategy("sig") == GroupStrategy::kSocialInfluence);
  CHECK(parse_group_strategy("avg") == GroupStrategy::kAverage);
  CHECK(parse_group_strategy("misery") == GroupStrategy::kLeastMisery);
  CHECK_FALSE(parse_group_strategy("max").has_value());
  for (auto s : kAllGroupStrategies) CHECK(parse_group_strategy(group_strategy_name(s)) == s);
}

TEST_CASE("average and least misery") {
  // user 0 scores item 0 at 0.8 * 0.5 = 0.4, user 1 at 0.4 * 0.5 = 0.2
  const auto p = solo_users({0.8, 0.4}, {0.5, 0.5});
  const auto c = plain_corpus(2, 2);
  const std::vector<UserIndex> g{0, 1};
  CHECK(score_average(p, c, g, 0) == doctest::Approx(0.3));
  CHECK(score_least_misery(p, c, g, 0) == doctest::Approx(0.2));

  const auto same = solo_users({0.5, 0.5}, {0.5, 0.5});
  CHECK(score_average(same, c, g, 0) == doctest::Approx(0.25));
  CHECK(score_least_misery(same, c, g, 0) == doctest::Approx(0.25));

  const auto dissent = solo_users({1.0, 0.0}, {0.5, 0.5});
  CHECK(score_least_misery(dissent, c, g, 0) == 0.0);

  CHECK_THROWS_AS(score_average(p, c, std::vector<UserIndex>{0}, 0), ContractViolation);
  CHECK_THROWS_AS(score_average(p, c, std::vector<UserIndex>{0, 0}, 0), ContractViolation);
}

TEST_CASE("social influence sums directed in-group edges") {
  std::mt19937_64 rng(61);
  oracle::Shape shape;
  shape.users = 4;
  shape.items = 3;
  const auto base = oracle::random_params(rng, shape);
  const auto c = plain_corpus(4, 3);

  // both directions between u1 and u2
  {
    auto p = base;
    p.graph = std::make_shared<const FriendGraph>(
        std::vector<std::vector<UserIndex>>{{0, 1}, {0, 1}, {2}, {3}});
    p.influence.assign(p.graph->num_slots(), 0.5);
    p.influence[p.graph->offset(2)] = 1.0;
    p.influence[p.graph->offset(3)] = 1.0;
    const std::vector<UserIndex> g{0, 1};
    for (ItemIndex i = 0; i < 3; ++i) {
      CHECK(score_social_influence(p, c, g, i) ==
            doctest::Approx(pair_joint(p, 0, 1, i) + pair_joint(p, 1, 0, i)).epsilon(1e-14));
    }
  }

  // a four-member group with edges u1u2, u1u3, u2u3, u3u4 (one direction each)
  {
    auto p = base;
    p.graph = std::make_shared<const FriendGraph>(
        std::vector<std::vector<UserIndex>>{{0, 1, 2}, {1, 2}, {2, 3}, {3}});
    std::vector<double> infl(p.graph->num_slots(), 1.0);
    normalize_influence(*p.graph, infl);
    p.influence = infl;
    const std::vector<UserIndex> g{0, 1, 2, 3};
    for (ItemIndex i = 0; i < 3; ++i) {
      const double expected = oracle::pair_joint(p, 0, 1, i) + oracle::pair_joint(p, 0, 2, i) +
                              oracle::pair_joint(p, 1, 2, i) + oracle::pair_joint(p, 2, 3, i);
      CHECK(score_social_influence(p, c, g, i) == doctest::Approx(expected).epsilon(1e-14));
    }
  }

  // a member without an in-group edge
  {
    auto p = base;
    p.graph = std::make_shared<const FriendGraph>(
        std::vector<std::vector<UserIndex>>{{0, 1}, {1}, {2}, {3}});
    std::vector<double> infl(p.graph->num_slots(), 1.0);
    normalize_influence(*p.graph, infl);
    p.influence = infl;
    const std::vector<UserIndex> g{0, 1, 2};
    CHECK(isolated_members(p, g) == std::vector<UserIndex>{2});
    try {
      score_social_influence(p, c, g, 0);
      FAIL("expected IsolatedMembersError");
    } catch (const IsolatedMembersError& e) {
      CHECK(e.members() == std::vector<UserIndex>{2});
    }
    CHECK_THROWS_AS(group_item_scores(p, c, g, GroupStrategy::kSocialInfluence),
                    IsolatedMembersError);
    CHECK_NOTHROW(group_item_scores(p, c, g, GroupStrategy::kAverage));
  }
}

TEST_CASE("group scores match enumeration on random instances") {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 40; ++trial) {
    oracle::Shape shape;
    shape.users = 5;
    shape.items = 6;
    shape.max_friends = 5;
    const auto p = oracle::random_params(rng, shape);
    const auto c = plain_corpus(shape.users, shape.items);
    std::vector<UserIndex> g{0, 1, 2, 3, 4};
    std::shuffle(g.begin(), g.end(), rng);
    g.resize(2 + trial % 3);

    const auto avg = group_item_scores(p, c, g, GroupStrategy::kAverage);
    const auto misery = group_item_scores(p, c, g, GroupStrategy::kLeastMisery);
    for (ItemIndex i = 0; i < shape.items; ++i) {
      double sum = 0.0;
      double low = INFINITY;
      for (auto u : g) {
        const double s = oracle::item_score(p, {}, u, i);
        sum += s;
        low = std::min(low, s);
      }
      CHECK(avg[i] == doctest::Approx(sum / static_cast<double>(g.size())).epsilon(1e-12));
      CHECK(score_average(p, c, g, i) == doctest::Approx(avg[i]).epsilon(1e-12));
      CHECK(misery[i] == doctest::Approx(low).epsilon(1e-12));
      CHECK(score_least_misery(p, c, g, i) == doctest::Approx(low).epsilon(1e-12));
      CHECK(misery[i] <= avg[i] * (1.0 + 1e-12));
    }
    if (!isolated_members(p, g).empty()) continue;
    const auto sig = group_item_scores(p, c, g, GroupStrategy::kSocialInfluence);
    for (ItemIndex i = 0; i < shape.items; ++i) {
      double expected = 0.0;
      for (auto u : g) {
        for (auto f : g) {
          if (u != f && oracle::influence(p, f, u) > 0.0) expected += oracle::pair_joint(p, u, f, i);
        }
      }
      CHECK(sig[i] == doctest::Approx(expected).epsilon(1e-12));
      CHECK(score_social_influence(p, c, g, i) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("two-member clique is symmetric under member swap") {
  std::mt19937_64 rng(63);
  oracle::Shape shape;
  shape.users = 2;
  shape.items = 8;
  shape.max_friends = 2;
  auto p = oracle::random_params(rng, shape);
  p.graph = std::make_shared<const FriendGraph>(std::vector<std::vector<UserIndex>>{{0, 1}, {0, 1}});
  p.influence = {0.3, 0.6, 0.7, 0.4};
  const auto c = plain_corpus(2, 8);
  const std::vector<Interaction> train{};
  const auto a = recommend_group(p, c, train, std::vector<UserIndex>{0, 1}, 0,
                                 GroupStrategy::kSocialInfluence);
  const auto b = recommend_group(p, c, train, std::vector<UserIndex>{1, 0}, 0,
                                 GroupStrategy::kSocialInfluence);
  REQUIRE(a.items.size() == 8);
  for (std::size_t r = 0; r < 8; ++r) CHECK(a.items[r].item == b.items[r].item);
}

TEST_CASE("group recommendations are fresh for every member and ordered") {
  const auto p = solo_users({0.5, 0.5}, {0.6, 0.3, 0.1});
  const auto c = plain_corpus(2, 3);
  const std::vector<UserIndex> g{0, 1};
  const std::vector<Interaction> none{};
  CHECK(recommend_group(p, c, none, g, 1, GroupStrategy::kAverage).items[0].item == 0);

  // two topics: user 0 loves item 0, user 1 assigns it almost nothing
  ParamSet q;
  q.graph = std::make_shared<const FriendGraph>(std::vector<std::vector<UserIndex>>{{0, 1}, {0, 1}});
  q.topic_prior = {0.5, 0.5};
  q.influence = {0.99, 0.01, 0.01, 0.99};
  q.topic_user = TopicTable(2, 2);
  q.topic_user(0, 0) = 1.0;
  q.topic_user(1, 1) = 1.0;
  q.topic_item = TopicTable(2, 3);
  q.topic_item(0, 0) = 0.95;
  q.topic_item(0, 1) = 0.05;
  q.topic_item(1, 0) = 0.02;
  q.topic_item(1, 1) = 0.48;
  q.topic_item(1, 2) = 0.5;
  const auto avg = recommend_group(q, c, none, g, 1, GroupStrategy::kAverage);
  const auto misery = recommend_group(q, c, none, g, 1, GroupStrategy::kLeastMisery);
  CHECK(avg.items[0].item == 0);
  CHECK(misery.items[0].item != 0);

  const std::vector<Interaction> seen{{0, 0}, {1, 2}};
  const auto fresh = recommend_group(q, c, seen, g, 0, GroupStrategy::kSocialInfluence);
  REQUIRE(fresh.items.size() == 1);
  CHECK(fresh.items[0].item == 1);

  // scores 0.3 and 0.5 on two items rank the second first
  const auto two = solo_users({1.0, 1.0}, {0.3, 0.5});
  const auto c2 = plain_corpus(2, 2);
  const auto ranked = recommend_group(two, c2, none, g, 2, GroupStrategy::kAverage);
  CHECK(ranked.items[0].item == 1);
  CHECK(ranked.items[1].item == 0);
}
