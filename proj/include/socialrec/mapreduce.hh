// Apache License, Version 2.0, refer to LICENSE.txt
//
// Partitioned EM in map/shuffle/reduce form.
//
// Each iteration: every mapper normalizes the previous reduce output into the
// same parameter snapshot (deferred normalization), computes posteriors for
// its contiguous slice of observations and emits keyed partial sums. The
// shuffle groups emissions by key in (worker, sequence) order and reducers
// add the grouped arrays element-wise. Because the grouped order does not
// depend on where the partition boundaries fall, the sums are bitwise
// independent of the worker count.

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "socialrec/em.hh"

namespace socialrec {

enum class EmissionRole : std::uint8_t {
  kFriendTopic = 0,  // key f, K values: Pr(f, z | u, i)
  kItemTopic = 1,    // key i, K values
  kTagTopic = 2,     // key w, K values
  kUserFriend = 3,   // key u, |F(u)| values: Pr(f | u, i) for f in F(u)
};

struct EmissionKey {
  EmissionRole role = EmissionRole::kFriendTopic;
  std::uint32_t id = 0;

  friend auto operator<=>(const EmissionKey&, const EmissionKey&) = default;
};

struct Emission {
  EmissionKey key;
  std::vector<double> values;

  friend bool operator==(const Emission&, const Emission&) = default;
};

// Spill layout: role byte, u32 id, u32 length, then `length` f64 values,
// all little-endian.
void write_emission(std::ostream& out, const Emission& emission);
// Reads emissions until end of stream.
std::vector<Emission> read_emissions(std::istream& in);

struct Partition {
  std::size_t worker = 0;
  std::size_t begin = 0;  // observation index range [begin, end)
  std::size_t end = 0;
};

// Contiguous, equal-size (up to one) slices covering [0, n).
std::vector<Partition> make_partitions(std::size_t num_observations, std::size_t workers);

// Same, with every boundary on a multiple of `block` (block == 0: no
// alignment).
std::vector<Partition> make_aligned_partitions(std::size_t num_observations, std::size_t workers,
                                               std::size_t block);

enum class EmissionMode {
  kCombined,  // ITEM_TOPIC / TAG_TOPIC pre-summed over friends per observation
  kLiteral,   // one ITEM_TOPIC / TAG_TOPIC emission per friend
};

// What a mapper starts from: the initial parameters at iteration 0, the
// previous reduce output afterwards.
using MapperState = std::variant<ParamSet, Accumulators>;

ParamSet normalize_state(const MapperState& state);

// Emissions of one mapper, stored back to back.
struct MapOutput {
  std::size_t worker = 0;
  std::vector<EmissionKey> keys;
  std::vector<std::size_t> offsets{0};  // values of emission k: [offsets[k], offsets[k+1])
  std::vector<double> values;
  std::vector<double> log_terms;  // per observation, clamped log evidence
  std::size_t degenerate_observations = 0;

  std::size_t size() const { return keys.size(); }
  std::span<const double> values_of(std::size_t k) const {
    return {values.data() + offsets[k], offsets[k + 1] - offsets[k]};
  }
  Emission emission(std::size_t k) const;
  void push(const EmissionKey& key, std::span<const double> v);
};

// With combine_block > 0 the mapper sums its emissions per key over each
// block of observations [b * block, (b + 1) * block) before emitting them, in
// key order. Partitions must then be block-aligned.
MapOutput map_task(const Partition& partition, std::span<const Observation> observations,
                   const MapperState& previous, EmissionMode mode = EmissionMode::kCombined,
                   std::size_t combine_block = 0);

// Same, with an already normalized snapshot.
MapOutput map_with_snapshot(const Partition& partition, std::span<const Observation> observations,
                            const ParamSet& snapshot, EmissionMode mode,
                            std::size_t combine_block = 0);

struct EmissionGroup {
  EmissionKey key;
  std::vector<std::span<const double>> values;  // in (worker, sequence) order
};

// Groups are sorted by key and view the mapper buffers, which must outlive
// them. Outputs must be passed in worker order.
std::vector<EmissionGroup> shuffle(const std::vector<MapOutput>& outputs);

// Sums each group in order and routes it into an accumulator shaped like
// `shape`. Pr+(z) is rebuilt as the per-topic row sums of the FRIEND_TOPIC
// sums. Groups are split across `workers` threads.
Accumulators reduce_task(const std::vector<EmissionGroup>& groups, const ParamSet& shape,
                         std::size_t workers = 1);

struct ParallelOptions {
  std::size_t workers = 1;
  EmissionMode mode = EmissionMode::kCombined;
  // Observations per mapper-side combiner block; 0 emits every observation's
  // sums individually. Outputs are identical across worker counts for a
  // fixed block size.
  std::size_t combine_block = 0;
  // When set, each iteration's emissions are spilled to
  // `<dir>/iter-<x>-worker-<w>.emissions`.
  std::optional<std::filesystem::path> spill_dir;
  std::function<void(std::uint32_t, const ParamSet&)> on_iteration;
};

TrainResult train_parallel_from(const ModelConfig& config, ParamSet init,
                                std::span<const Observation> observations,
                                const ParallelOptions& options);

TrainResult train_parallel(const ModelConfig& config, const Corpus& corpus,
                           std::span<const Interaction> train, const ParallelOptions& options);

}  // namespace socialrec
