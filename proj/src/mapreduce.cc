// Apache License, Version 2.0, refer to LICENSE.txt

#include "socialrec/mapreduce.hh"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include "socialrec/byte_io.hh"
#include "socialrec/error.hh"

namespace socialrec {

namespace {

// Runs fn(t) for t in [0, tasks) on one thread per task and rethrows the first
// failure.
template <class Fn>
void run_concurrently(std::size_t tasks, Fn&& fn) {
  if (tasks <= 1) {
    if (tasks == 1) fn(std::size_t{0});
    return;
  }
  std::vector<std::exception_ptr> errors(tasks);
  {
    std::vector<std::jthread> threads;
    threads.reserve(tasks);
    for (std::size_t t = 0; t < tasks; ++t) {
      threads.emplace_back([&, t] {
        try {
          fn(t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::size_t expected_length(const EmissionKey& key, const ParamSet& shape) {
  if (key.role == EmissionRole::kUserFriend) return shape.graph->degree(key.id);
  return shape.num_topics();
}

// Per-key sums over one block of observations, flushed in key order.
class Combiner {
 public:
  explicit Combiner(const ParamSet& shape) {
    const std::size_t k = shape.num_topics();
    const std::size_t widths[] = {shape.num_users(), shape.num_items(), shape.num_tags(),
                                  shape.num_users()};
    for (std::size_t r = 0; r < 4; ++r) {
      offsets_[r].assign(widths[r] + 1, 0);
      for (std::size_t id = 0; id < widths[r]; ++id) {
        const std::size_t len = r == 3 ? shape.graph->degree(static_cast<UserIndex>(id)) : k;
        offsets_[r][id + 1] = offsets_[r][id] + len;
      }
      sums_[r].assign(offsets_[r].back(), 0.0);
      seen_[r].assign(widths[r], false);
    }
  }

  void add(const EmissionKey& key, std::span<const double> values) {
    const auto r = static_cast<std::size_t>(key.role);
    if (!seen_[r][key.id]) {
      seen_[r][key.id] = true;
      touched_[r].push_back(key.id);
    }
    double* sum = sums_[r].data() + offsets_[r][key.id];
    for (std::size_t c = 0; c < values.size(); ++c) sum[c] += values[c];
  }

  void flush(MapOutput& out) {
    for (std::size_t r = 0; r < 4; ++r) {
      std::sort(touched_[r].begin(), touched_[r].end());
      for (auto id : touched_[r]) {
        const auto begin = offsets_[r][id];
        const auto end = offsets_[r][id + 1];
        out.push({static_cast<EmissionRole>(r), id},
                 std::span<const double>(sums_[r].data() + begin, end - begin));
        std::fill(sums_[r].begin() + static_cast<std::ptrdiff_t>(begin),
                  sums_[r].begin() + static_cast<std::ptrdiff_t>(end), 0.0);
        seen_[r][id] = false;
      }
      touched_[r].clear();
    }
  }

 private:
  std::array<std::vector<std::size_t>, 4> offsets_;
  std::array<std::vector<double>, 4> sums_;
  std::array<std::vector<bool>, 4> seen_;
  std::array<std::vector<std::uint32_t>, 4> touched_;
};

}  // namespace

void write_emission(std::ostream& out, const Emission& emission) {
  out.put(static_cast<char>(emission.key.role));
  byte_io::put_uint<std::uint32_t>(out, emission.key.id);
  byte_io::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(emission.values.size()));
  for (double v : emission.values) byte_io::put_f64(out, v);
}

std::vector<Emission> read_emissions(std::istream& in) {
  std::vector<Emission> out;
  while (true) {
    const int role = in.get();
    if (role == std::char_traits<char>::eof()) break;
    if (role < 0 || role > static_cast<int>(EmissionRole::kUserFriend)) {
      throw DataError("unknown emission role " + std::to_string(role));
    }
    Emission e;
    e.key.role = static_cast<EmissionRole>(role);
    e.key.id = byte_io::get_uint<std::uint32_t>(in);
    const auto length = byte_io::get_uint<std::uint32_t>(in);
    e.values.resize(length);
    for (auto& v : e.values) v = byte_io::get_f64(in);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Partition> make_partitions(std::size_t num_observations, std::size_t workers) {
  if (workers == 0) throw ContractViolation("worker count must be >= 1");
  std::vector<Partition> parts(workers);
  const std::size_t base = num_observations / workers;
  const std::size_t extra = num_observations % workers;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t size = base + (w < extra ? 1 : 0);
    parts[w] = {w, begin, begin + size};
    begin += size;
  }
  return parts;
}

std::vector<Partition> make_aligned_partitions(std::size_t num_observations, std::size_t workers,
                                               std::size_t block) {
  if (block == 0) return make_partitions(num_observations, workers);
  const std::size_t blocks = (num_observations + block - 1) / block;
  auto parts = make_partitions(blocks, workers);
  for (auto& p : parts) {
    p.begin = std::min(p.begin * block, num_observations);
    p.end = std::min(p.end * block, num_observations);
  }
  return parts;
}

ParamSet normalize_state(const MapperState& state) {
  if (const auto* params = std::get_if<ParamSet>(&state)) return *params;
  return m_step(std::get<Accumulators>(state));
}

Emission MapOutput::emission(std::size_t k) const {
  const auto v = values_of(k);
  return {keys[k], std::vector<double>(v.begin(), v.end())};
}

void MapOutput::push(const EmissionKey& key, std::span<const double> v) {
  keys.push_back(key);
  values.insert(values.end(), v.begin(), v.end());
  offsets.push_back(values.size());
}

MapOutput map_with_snapshot(const Partition& partition, std::span<const Observation> observations,
                            const ParamSet& snapshot, EmissionMode mode, std::size_t combine_block) {
  if (combine_block > 0 && partition.begin % combine_block != 0) {
    throw ContractViolation("partition is not aligned to the combiner block");
  }
  MapOutput out;
  std::optional<Combiner> combiner;
  if (combine_block > 0) combiner.emplace(snapshot);
  auto emit = [&](const EmissionKey& key, std::span<const double> values) {
    if (combiner) {
      combiner->add(key, values);
    } else {
      out.push(key, values);
    }
  };
  out.worker = partition.worker;
  const auto& graph = *snapshot.graph;
  const std::size_t k = snapshot.num_topics();
  std::vector<double> block;
  std::vector<double> column(k);
  std::vector<double> item_sum(k);
  std::vector<double> friend_sum;
  out.log_terms.reserve(partition.end - partition.begin);

  for (std::size_t n = partition.begin; n < partition.end; ++n) {
    if (combiner && n > partition.begin && n % combine_block == 0) combiner->flush(out);
    const auto& obs = observations[n];
    const auto friends = graph.friends(obs.user);
    const std::size_t nf = friends.size();
    block.resize(k * nf);
    bool degenerate = false;
    const double evidence = posterior_values(snapshot, obs, block, &degenerate);
    if (degenerate) ++out.degenerate_observations;
    out.log_terms.push_back(std::log(std::max(evidence, kLogClamp)));

    std::fill(item_sum.begin(), item_sum.end(), 0.0);
    friend_sum.assign(nf, 0.0);
    for (std::size_t s = 0; s < nf; ++s) {
      for (std::size_t z = 0; z < k; ++z) {
        column[z] = block[z * nf + s];
        friend_sum[s] += column[z];
        item_sum[z] += column[z];
      }
      if (mode == EmissionMode::kLiteral) {
        emit({EmissionRole::kItemTopic, obs.item}, column);
        if (snapshot.content) emit({EmissionRole::kTagTopic, obs.tag}, column);
      }
      emit({EmissionRole::kFriendTopic, friends[s]}, column);
    }
    if (mode == EmissionMode::kCombined) {
      if (snapshot.content) emit({EmissionRole::kTagTopic, obs.tag}, item_sum);
      emit({EmissionRole::kItemTopic, obs.item}, item_sum);
    }
    emit({EmissionRole::kUserFriend, obs.user}, friend_sum);
  }
  if (combiner) combiner->flush(out);
  return out;
}

MapOutput map_task(const Partition& partition, std::span<const Observation> observations,
                   const MapperState& previous, EmissionMode mode, std::size_t combine_block) {
  const ParamSet snapshot = normalize_state(previous);
  return map_with_snapshot(partition, observations, snapshot, mode, combine_block);
}

std::vector<EmissionGroup> shuffle(const std::vector<MapOutput>& outputs) {
  // Counting sort over the dense (role, id) key space; visiting outputs in
  // worker order keeps each bucket in (worker, sequence) order.
  constexpr std::size_t kRoles = 4;
  std::array<std::size_t, kRoles> width{};
  for (const auto& output : outputs) {
    for (const auto& key : output.keys) {
      auto& w = width[static_cast<std::size_t>(key.role)];
      w = std::max<std::size_t>(w, std::size_t{key.id} + 1);
    }
  }
  std::array<std::size_t, kRoles + 1> base{};
  for (std::size_t r = 0; r < kRoles; ++r) base[r + 1] = base[r] + width[r];
  auto bucket_of = [&](const EmissionKey& key) {
    return base[static_cast<std::size_t>(key.role)] + key.id;
  };

  std::vector<std::size_t> counts(base[kRoles], 0);
  for (const auto& output : outputs) {
    for (const auto& key : output.keys) ++counts[bucket_of(key)];
  }
  std::vector<std::size_t> group_of(base[kRoles], 0);
  std::vector<EmissionGroup> groups;
  for (std::size_t r = 0; r < kRoles; ++r) {
    for (std::uint32_t id = 0; id < width[r]; ++id) {
      const auto bucket = base[r] + id;
      if (counts[bucket] == 0) continue;
      group_of[bucket] = groups.size();
      EmissionGroup g;
      g.key = {static_cast<EmissionRole>(r), id};
      g.values.reserve(counts[bucket]);
      groups.push_back(std::move(g));
    }
  }
  for (const auto& output : outputs) {
    for (std::size_t e = 0; e < output.size(); ++e) {
      groups[group_of[bucket_of(output.keys[e])]].values.push_back(output.values_of(e));
    }
  }
  return groups;
}

Accumulators reduce_task(const std::vector<EmissionGroup>& groups, const ParamSet& shape,
                         std::size_t workers) {
  auto acc = Accumulators::zeros_like(shape);
  const std::size_t k = shape.num_topics();
  for (const auto& g : groups) {
    const auto expected = expected_length(g.key, shape);
    for (const auto& v : g.values) {
      if (v.size() != expected) throw DataError("emission length mismatch within a group");
    }
  }

  auto reduce_range = [&](std::size_t begin, std::size_t end) {
    std::vector<double> sum;
    for (std::size_t n = begin; n < end; ++n) {
      const auto& g = groups[n];
      sum.assign(g.values.front().size(), 0.0);
      for (const auto& v : g.values) {
        for (std::size_t c = 0; c < v.size(); ++c) sum[c] += v[c];
      }
      switch (g.key.role) {
        case EmissionRole::kFriendTopic:
          for (std::size_t z = 0; z < k; ++z) acc.topic_user(z, g.key.id) = sum[z];
          break;
        case EmissionRole::kItemTopic:
          for (std::size_t z = 0; z < k; ++z) acc.topic_item(z, g.key.id) = sum[z];
          break;
        case EmissionRole::kTagTopic:
          for (std::size_t z = 0; z < k; ++z) acc.topic_tag(z, g.key.id) = sum[z];
          break;
        case EmissionRole::kUserFriend:
          std::copy(sum.begin(), sum.end(),
                    acc.influence.begin() + static_cast<std::ptrdiff_t>(shape.graph->offset(g.key.id)));
          break;
      }
    }
  };
  const std::size_t tasks = std::max<std::size_t>(1, std::min(workers, groups.size()));
  const auto ranges = make_partitions(groups.size(), tasks);
  run_concurrently(tasks, [&](std::size_t t) { reduce_range(ranges[t].begin, ranges[t].end); });

  for (std::size_t z = 0; z < k; ++z) {
    double total = 0.0;
    for (double v : acc.topic_user.row(z)) total += v;
    acc.topic_prior[z] = total;
  }
  return acc;
}

TrainResult train_parallel_from(const ModelConfig& config, ParamSet init,
                                std::span<const Observation> observations,
                                const ParallelOptions& options) {
  config.validate();
  if (options.workers == 0) throw ContractViolation("worker count must be >= 1");
  const auto partitions =
      make_aligned_partitions(observations.size(), options.workers, options.combine_block);
  const ParamSet shape = init;
  ConvergenceMonitor monitor(config, observations.size());
  MapperState state = std::move(init);
  StopReason reason = StopReason::kMaxIters;

  for (std::uint32_t x = 0; x < config.max_iters; ++x) {
    if (options.on_iteration) options.on_iteration(x, normalize_state(state));
    const auto start = std::chrono::steady_clock::now();

    std::vector<MapOutput> outputs(partitions.size());
    run_concurrently(partitions.size(), [&](std::size_t w) {
      outputs[w] = map_task(partitions[w], observations, state, options.mode, options.combine_block);
    });

    if (options.spill_dir) {
      std::filesystem::create_directories(*options.spill_dir);
      for (const auto& output : outputs) {
        const auto path = *options.spill_dir / ("iter-" + std::to_string(x) + "-worker-" +
                                                std::to_string(output.worker) + ".emissions");
        std::ofstream spill(path, std::ios::binary | std::ios::trunc);
        if (!spill) throw DataError("cannot write " + path.string());
        for (std::size_t e = 0; e < output.size(); ++e) write_emission(spill, output.emission(e));
      }
    }

    double ll = 0.0;
    for (const auto& output : outputs) {
      for (double term : output.log_terms) ll += term;
    }
    const auto groups = shuffle(outputs);
    auto acc = reduce_task(groups, shape, options.workers);
    acc.observations = observations.size();
    state = std::move(acc);

    const std::chrono::duration<double, std::milli> elapsed =
        std::chrono::steady_clock::now() - start;
    if (monitor.record(ll, elapsed.count())) {
      reason = StopReason::kConverged;
      break;
    }
  }
  ParamSet params = normalize_state(state);
  monitor.finish(reason, log_likelihood(params, observations));
  return {std::move(params), monitor.take()};
}

TrainResult train_parallel(const ModelConfig& config, const Corpus& corpus,
                           std::span<const Interaction> train, const ParallelOptions& options) {
  auto init = init_params(config, corpus, train);
  const auto obs = make_observations(corpus, train, config.content);
  return train_parallel_from(config, std::move(init), obs.observations, options);
}

}  // namespace socialrec
