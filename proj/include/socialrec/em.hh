// Apache License, Version 2.0, refer to LICENSE.txt
//
// Serial EM over the joint latent pair (topic z, friend f).
//
// E-step, per observation (u, i[, w]):
//
//   Pr(z, f | u, i[, w]) = Pr(z) Pr(f|z) Pr(u|f) Pr(i|z) [Pr(w|z)] / evidence
//
// M-step: every parameter becomes its posterior sum, smoothed by kSmoothing
// and normalized along the parameter's own axis. One iteration fuses both
// steps in a single pass over the observations.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "socialrec/corpus.hh"
#include "socialrec/model.hh"

namespace socialrec {

inline constexpr double kSmoothing = 1e-10;

// Normalized joint posterior over (z, f in F(u)) for one observation.
struct PosteriorBlock {
  Observation obs;
  std::size_t topics = 0;
  std::size_t friends = 0;
  std::vector<double> values;  // topic-major: values[z * friends + slot]
  double evidence = 0.0;       // the E-step denominator, Pr(u,i[,w])
  bool degenerate = false;     // all numerators were zero; posterior is uniform

  double operator()(std::size_t z, std::size_t slot) const { return values[z * friends + slot]; }
};

PosteriorBlock e_step(const ParamSet& params, const Observation& obs);

// Allocation-free form of e_step: writes the topic-major block into `out`
// (size K * |F(u)|) and returns the evidence.
double posterior_values(const ParamSet& params, const Observation& obs, std::span<double> out,
                        bool* degenerate);

// Unnormalized posterior sums, shaped like a ParamSet.
struct Accumulators {
  bool social = true;
  bool content = false;
  std::uint64_t seed = 0;
  std::shared_ptr<const FriendGraph> graph;

  std::vector<double> topic_prior;
  std::vector<double> influence;
  TopicTable topic_user;
  TopicTable topic_item;
  TopicTable topic_tag;
  std::size_t observations = 0;

  static Accumulators zeros_like(const ParamSet& params);

  // Folds one posterior block into the sums.
  void add(const PosteriorBlock& block);
  double prior_mass() const;
};

struct MStepStats {
  std::size_t uniform_groups = 0;  // normalization groups that had no mass at all
};

// Smooths every cell by kSmoothing and normalizes each family along its axis.
ParamSet m_step(const Accumulators& acc, MStepStats* stats = nullptr);

struct IterationResult {
  ParamSet next;
  double log_likelihood = 0.0;  // of the input parameters
  std::size_t degenerate_observations = 0;
};

// One fused E+M pass. The log-likelihood is read off the E-step evidences.
IterationResult run_iteration(const ParamSet& params, std::span<const Observation> observations);

enum class StopReason { kConverged, kMaxIters };

struct IterationRecord {
  std::uint32_t iter = 0;
  double log_likelihood = 0.0;  // of the parameters entering this iteration
  double delta = 0.0;           // NaN on the first iteration
  double millis = 0.0;
};

struct TrainTrace {
  std::vector<IterationRecord> iterations;
  StopReason reason = StopReason::kMaxIters;
  double final_log_likelihood = 0.0;  // of the returned parameters
};

// `iter<TAB>loglik<TAB>delta[<TAB>ms]` per iteration. Wall-clock times are
// optional so that traces can be compared byte for byte.
void write_trace(std::ostream& out, const TrainTrace& trace, bool with_timing = true);

// Stopping rule shared by the serial and partitioned trainers.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(const ModelConfig& config, std::size_t num_observations);

  // Records LL(theta_x); returns true once the improvement over the previous
  // iteration falls below epsilon.
  bool record(double log_likelihood, double millis);
  void finish(StopReason reason, double final_log_likelihood);
  const TrainTrace& trace() const { return trace_; }
  TrainTrace take() { return std::move(trace_); }

 private:
  double epsilon_;
  double scale_;
  TrainTrace trace_;
};

struct TrainOptions {
  // Called with theta_x before iteration x runs.
  std::function<void(std::uint32_t, const ParamSet&)> on_iteration;
};

struct TrainResult {
  ParamSet params;
  TrainTrace trace;
};

// Runs EM from `init` until convergence or config.max_iters iterations.
TrainResult train_from(const ModelConfig& config, ParamSet init,
                       std::span<const Observation> observations,
                       const TrainOptions& options = {});

// init_params on `train`, then train_from on the variant's observations.
TrainResult train(const ModelConfig& config, const Corpus& corpus,
                  std::span<const Interaction> train, const TrainOptions& options = {});

}  // namespace socialrec
