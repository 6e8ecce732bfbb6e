// Apache License, Version 2.0, refer to LICENSE.txt

#include "socialrec/em.hh"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace socialrec {

double posterior_values(const ParamSet& params, const Observation& obs, std::span<double> out,
                      bool* degenerate) {
  const auto& graph = *params.graph;
  const auto friends = graph.friends(obs.user);
  const auto base = graph.offset(obs.user);
  const std::size_t k = params.num_topics();
  const std::size_t nf = friends.size();

  double evidence = 0.0;
  for (std::size_t z = 0; z < k; ++z) {
    double topic_factor = params.topic_prior[z] * params.topic_item(z, obs.item);
    if (params.content) topic_factor *= params.topic_tag(z, obs.tag);
    for (std::size_t s = 0; s < nf; ++s) {
      const double num =
          topic_factor * params.topic_user(z, friends[s]) * params.influence[base + s];
      out[z * nf + s] = num;
      evidence += num;
    }
  }
  if (evidence > 0.0) {
    for (std::size_t c = 0; c < k * nf; ++c) out[c] /= evidence;
    *degenerate = false;
  } else {
    const double uniform = 1.0 / static_cast<double>(k * nf);
    for (std::size_t c = 0; c < k * nf; ++c) out[c] = uniform;
    *degenerate = true;
  }
  return evidence;
}

namespace {

void accumulate(Accumulators& acc, const Observation& obs, std::span<const double> posterior) {
  const auto& graph = *acc.graph;
  const auto friends = graph.friends(obs.user);
  const auto base = graph.offset(obs.user);
  const std::size_t k = acc.topic_prior.size();
  const std::size_t nf = friends.size();
  for (std::size_t s = 0; s < nf; ++s) {
    const auto f = friends[s];
    for (std::size_t z = 0; z < k; ++z) {
      const double p = posterior[z * nf + s];
      acc.topic_user(z, f) += p;
      acc.topic_item(z, obs.item) += p;
      acc.influence[base + s] += p;
      acc.topic_prior[z] += p;
      if (acc.content) acc.topic_tag(z, obs.tag) += p;
    }
  }
  ++acc.observations;
}

}  // namespace

PosteriorBlock e_step(const ParamSet& params, const Observation& obs) {
  PosteriorBlock block;
  block.obs = obs;
  block.topics = params.num_topics();
  block.friends = params.graph->degree(obs.user);
  block.values.resize(block.topics * block.friends);
  block.evidence = posterior_values(params, obs, block.values, &block.degenerate);
  return block;
}

Accumulators Accumulators::zeros_like(const ParamSet& params) {
  Accumulators acc;
  acc.social = params.social;
  acc.content = params.content;
  acc.seed = params.seed;
  acc.graph = params.graph;
  acc.topic_prior.assign(params.num_topics(), 0.0);
  acc.influence.assign(params.influence.size(), 0.0);
  acc.topic_user = TopicTable(params.topic_user.rows(), params.topic_user.cols());
  acc.topic_item = TopicTable(params.topic_item.rows(), params.topic_item.cols());
  acc.topic_tag = TopicTable(params.topic_tag.rows(), params.topic_tag.cols());
  return acc;
}

void Accumulators::add(const PosteriorBlock& block) { accumulate(*this, block.obs, block.values); }

double Accumulators::prior_mass() const {
  double total = 0.0;
  for (double v : topic_prior) total += v;
  return total;
}

ParamSet m_step(const Accumulators& acc, MStepStats* stats) {
  ParamSet params;
  params.social = acc.social;
  params.content = acc.content;
  params.seed = acc.seed;
  params.graph = acc.graph;
  params.topic_prior = acc.topic_prior;
  params.influence = acc.influence;
  params.topic_user = acc.topic_user;
  params.topic_item = acc.topic_item;
  params.topic_tag = acc.topic_tag;

  auto smooth = [](std::span<double> values) {
    for (double& v : values) v += kSmoothing;
  };
  smooth(params.topic_prior);
  smooth(params.influence);
  smooth(params.topic_user.data());
  smooth(params.topic_item.data());
  smooth(params.topic_tag.data());

  std::size_t uniform = 0;
  uniform += normalize_distribution(params.topic_prior);
  uniform += normalize_influence(*params.graph, params.influence);
  uniform += normalize_rows(params.topic_user);
  uniform += normalize_rows(params.topic_item);
  uniform += normalize_rows(params.topic_tag);
  if (stats) stats->uniform_groups = uniform;
  return params;
}

IterationResult run_iteration(const ParamSet& params, std::span<const Observation> observations) {
  IterationResult result;
  auto acc = Accumulators::zeros_like(params);
  std::size_t max_degree = 0;
  for (UserIndex u = 0; u < params.graph->num_users(); ++u) {
    max_degree = std::max(max_degree, params.graph->degree(u));
  }
  std::vector<double> scratch(params.num_topics() * max_degree);
  double ll = 0.0;
  for (const auto& obs : observations) {
    bool degenerate = false;
    const std::span<double> block(scratch.data(),
                                  params.num_topics() * params.graph->degree(obs.user));
    const double evidence = posterior_values(params, obs, block, &degenerate);
    if (degenerate) ++result.degenerate_observations;
    ll += std::log(std::max(evidence, kLogClamp));
    accumulate(acc, obs, block);
  }
  result.next = m_step(acc);
  result.log_likelihood = ll;
  return result;
}

void write_trace(std::ostream& out, const TrainTrace& trace, bool with_timing) {
  const auto old_precision = out.precision(17);
  for (const auto& r : trace.iterations) {
    out << r.iter << '\t' << r.log_likelihood << '\t' << r.delta;
    if (with_timing) out << '\t' << r.millis;
    out << '\n';
  }
  out.precision(old_precision);
}

ConvergenceMonitor::ConvergenceMonitor(const ModelConfig& config, std::size_t num_observations)
    : epsilon_(config.epsilon),
      scale_(config.convergence == Convergence::kPerObservation && num_observations > 0
                 ? 1.0 / static_cast<double>(num_observations)
                 : 1.0) {}

bool ConvergenceMonitor::record(double log_likelihood, double millis) {
  IterationRecord r;
  r.iter = static_cast<std::uint32_t>(trace_.iterations.size());
  r.log_likelihood = log_likelihood;
  r.millis = millis;
  r.delta = trace_.iterations.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : log_likelihood - trace_.iterations.back().log_likelihood;
  trace_.iterations.push_back(r);
  return trace_.iterations.size() > 1 && r.delta * scale_ < epsilon_;
}

void ConvergenceMonitor::finish(StopReason reason, double final_log_likelihood) {
  trace_.reason = reason;
  trace_.final_log_likelihood = final_log_likelihood;
}

TrainResult train_from(const ModelConfig& config, ParamSet init,
                       std::span<const Observation> observations, const TrainOptions& options) {
  config.validate();
  ConvergenceMonitor monitor(config, observations.size());
  ParamSet params = std::move(init);
  StopReason reason = StopReason::kMaxIters;
  for (std::uint32_t x = 0; x < config.max_iters; ++x) {
    if (options.on_iteration) options.on_iteration(x, params);
    const auto start = std::chrono::steady_clock::now();
    auto step = run_iteration(params, observations);
    params = std::move(step.next);
    const std::chrono::duration<double, std::milli> elapsed =
        std::chrono::steady_clock::now() - start;
    if (monitor.record(step.log_likelihood, elapsed.count())) {
      reason = StopReason::kConverged;
      break;
    }
  }
  monitor.finish(reason, log_likelihood(params, observations));
  return {std::move(params), monitor.take()};
}

TrainResult train(const ModelConfig& config, const Corpus& corpus,
                  std::span<const Interaction> train, const TrainOptions& options) {
  auto init = init_params(config, corpus, train);
  const auto obs = make_observations(corpus, train, config.content);
  return train_from(config, std::move(init), obs.observations, options);
}

}  // namespace socialrec
