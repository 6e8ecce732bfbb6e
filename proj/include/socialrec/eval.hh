// Apache License, Version 2.0, refer to LICENSE.txt
//
// Offline metrics: precision/recall@n over a holdout split, relative ranking
// of held-out group items, and CDFs of self and friend influence.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "socialrec/corpus.hh"
#include "socialrec/group.hh"
#include "socialrec/model.hh"

namespace socialrec {

inline constexpr std::size_t kDefaultCutoffs[] = {5, 10, 20, 50};

struct PrecisionRecall {
  std::size_t n = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PrecisionRecallReport {
  std::vector<PrecisionRecall> at;
  std::size_t users_evaluated = 0;  // users with a non-empty test set
};

// Macro-averaged over users with at least one test item. A user's validation
// set is the distinct items of their test interactions; recommendations are
// the top-n fresh items given split.train.
PrecisionRecallReport precision_recall_at_n(const ParamSet& params, const Corpus& corpus,
                                            const Split& split, std::span<const std::size_t> cutoffs);

// l / m with l the 1-based position and m the candidate list length.
double relative_rank(std::size_t position, std::size_t list_length);

// 1 + number of candidates with a strictly higher score, so tied items share
// the best rank.
std::size_t best_rank(std::span<const double> candidate_scores, double target);

struct RelativeRankingResult {
  GroupStrategy strategy = GroupStrategy::kAverage;
  double mean = 0.0;  // NaN when no event was evaluable
  std::size_t evaluated = 0;
  std::size_t skipped_isolated = 0;   // SIG only: some member has no in-group edge
  std::size_t skipped_not_fresh = 0;  // ground-truth item already seen by a member
};

RelativeRankingResult relative_ranking(const ParamSet& params, const Corpus& corpus,
                                       std::span<const Interaction> train,
                                       std::span<const GroupEvent> events, GroupStrategy strategy);

struct CdfPoint {
  double value = 0.0;
  double cumulative = 0.0;
};

struct InfluenceCdf {
  std::vector<CdfPoint> self;    // Pr(u|u) analogue of every user
  std::vector<CdfPoint> friend_;  // every non-self friend term
};

// Empirical CDFs of the generative influence Pr(f|u).
InfluenceCdf influence_cdf(const ParamSet& params);

// Sorted (value, k / n) pairs.
std::vector<CdfPoint> empirical_cdf(std::vector<double> values);

// `metric<TAB>n-or-strategy<TAB>value` lines.
void write_metrics(std::ostream& out, const PrecisionRecallReport& report);
void write_metrics(std::ostream& out, std::span<const RelativeRankingResult> results);
// `value<TAB>cum_fraction` lines.
void write_cdf(std::ostream& out, std::span<const CdfPoint> cdf);

}  // namespace socialrec
