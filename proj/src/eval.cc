// Apache License, Version 2.0, refer to LICENSE.txt

#include "socialrec/eval.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "socialrec/error.hh"
#include "socialrec/recommender.hh"

namespace socialrec {

PrecisionRecallReport precision_recall_at_n(const ParamSet& params, const Corpus& corpus,
                                            const Split& split, std::span<const std::size_t> cutoffs) {
  PrecisionRecallReport report;
  for (auto n : cutoffs) {
    if (n == 0) throw ContractViolation("cutoffs must be >= 1");
    report.at.push_back({n, 0.0, 0.0});
  }
  if (cutoffs.empty()) return report;
  const std::size_t largest = *std::max_element(cutoffs.begin(), cutoffs.end());

  const auto histories = user_histories(params.num_users(), split.train);
  const auto validation = user_histories(params.num_users(), split.test);
  for (UserIndex u = 0; u < validation.size(); ++u) {
    const auto& truth = validation[u];
    if (truth.empty()) continue;
    ++report.users_evaluated;
    const auto ranked = rank_fresh(item_scores(params, corpus, u), histories[u], largest);
    for (auto& entry : report.at) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < std::min(entry.n, ranked.size()); ++r) {
        if (std::binary_search(truth.begin(), truth.end(), ranked[r].item)) ++hits;
      }
      entry.precision += static_cast<double>(hits) / static_cast<double>(entry.n);
      entry.recall += static_cast<double>(hits) / static_cast<double>(truth.size());
    }
  }
  if (report.users_evaluated > 0) {
    for (auto& entry : report.at) {
      entry.precision /= static_cast<double>(report.users_evaluated);
      entry.recall /= static_cast<double>(report.users_evaluated);
    }
  }
  return report;
}

double relative_rank(std::size_t position, std::size_t list_length) {
  if (position == 0 || position > list_length) {
    throw ContractViolation("rank position must lie in [1, list length]");
  }
  return static_cast<double>(position) / static_cast<double>(list_length);
}

std::size_t best_rank(std::span<const double> candidate_scores, double target) {
  std::size_t higher = 0;
  for (double s : candidate_scores) {
    if (s > target) ++higher;
  }
  return higher + 1;
}

RelativeRankingResult relative_ranking(const ParamSet& params, const Corpus& corpus,
                                       std::span<const Interaction> train,
                                       std::span<const GroupEvent> events, GroupStrategy strategy) {
  RelativeRankingResult result;
  result.strategy = strategy;
  const auto histories = user_histories(params.num_users(), train);
  double total = 0.0;
  std::vector<ItemIndex> seen;
  std::vector<double> candidates;
  for (const auto& event : events) {
    if (strategy == GroupStrategy::kSocialInfluence &&
        !isolated_members(params, event.members).empty()) {
      ++result.skipped_isolated;
      continue;
    }
    seen.clear();
    for (auto u : event.members) seen.insert(seen.end(), histories[u].begin(), histories[u].end());
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    if (std::binary_search(seen.begin(), seen.end(), event.item)) {
      ++result.skipped_not_fresh;
      continue;
    }
    const auto scores = group_item_scores(params, corpus, event.members, strategy);
    candidates.clear();
    for (ItemIndex i = 0; i < scores.size(); ++i) {
      if (!std::binary_search(seen.begin(), seen.end(), i)) candidates.push_back(scores[i]);
    }
    total += relative_rank(best_rank(candidates, scores[event.item]), candidates.size());
    ++result.evaluated;
  }
  result.mean = result.evaluated == 0 ? std::numeric_limits<double>::quiet_NaN()
                                      : total / static_cast<double>(result.evaluated);
  return result;
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> cdf;
  cdf.reserve(values.size());
  const auto n = static_cast<double>(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    cdf.push_back({values[k], static_cast<double>(k + 1) / n});
  }
  return cdf;
}

InfluenceCdf influence_cdf(const ParamSet& params) {
  const auto gen = derive_generative_influence(params);
  const auto& graph = *gen.graph;
  std::vector<double> self;
  std::vector<double> others;
  for (UserIndex u = 0; u < graph.num_users(); ++u) {
    const auto friends = graph.friends(u);
    for (std::size_t s = 0; s < friends.size(); ++s) {
      const double value = gen.values[graph.offset(u) + s];
      (friends[s] == u ? self : others).push_back(value);
    }
  }
  return {empirical_cdf(std::move(self)), empirical_cdf(std::move(others))};
}

void write_metrics(std::ostream& out, const PrecisionRecallReport& report) {
  out.precision(17);
  for (const auto& entry : report.at) out << "precision\t" << entry.n << '\t' << entry.precision << '\n';
  for (const auto& entry : report.at) out << "recall\t" << entry.n << '\t' << entry.recall << '\n';
  out << "users_evaluated\t-\t" << report.users_evaluated << '\n';
}

void write_metrics(std::ostream& out, std::span<const RelativeRankingResult> results) {
  out.precision(17);
  for (const auto& r : results) {
    const auto name = group_strategy_name(r.strategy);
    out << "relative_ranking\t" << name << '\t' << r.mean << '\n';
    out << "groups_evaluated\t" << name << '\t' << r.evaluated << '\n';
    out << "groups_skipped_isolated\t" << name << '\t' << r.skipped_isolated << '\n';
    out << "groups_skipped_not_fresh\t" << name << '\t' << r.skipped_not_fresh << '\n';
  }
}

void write_cdf(std::ostream& out, std::span<const CdfPoint> cdf) {
  out.precision(17);
  for (const auto& p : cdf) out << p.value << '\t' << p.cumulative << '\n';
}

}  // namespace socialrec
