// Apache License, Version 2.0, refer to LICENSE.txt

#include "socialrec/checkpoint.hh"

#include <algorithm>
#include <array>
#include <fstream>
#include <tuple>

#include "socialrec/byte_io.hh"
#include "socialrec/error.hh"

namespace socialrec {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'O', 'C', 'R', 'E', 'C', '\x01', '\n'};
constexpr std::uint32_t kFlagSocial = 1u << 0;
constexpr std::uint32_t kFlagContent = 1u << 1;

using byte_io::get_f64;
using byte_io::get_uint;
using byte_io::put_f64;
using byte_io::put_uint;

void put_array(std::ostream& out, std::span<const double> values) {
  put_uint<std::uint64_t>(out, values.size());
  for (double v : values) put_f64(out, v);
}

std::vector<double> get_array(std::istream& in, std::uint64_t expected, const char* what) {
  const auto length = get_uint<std::uint64_t>(in);
  if (length != expected) {
    throw DataError(std::string("checkpoint table ") + what + " has length " +
                    std::to_string(length) + ", expected " + std::to_string(expected));
  }
  std::vector<double> values(length);
  for (auto& v : values) v = get_f64(in);
  return values;
}

TopicTable to_table(std::size_t rows, std::size_t cols, const std::vector<double>& values) {
  TopicTable table(rows, cols);
  std::copy(values.begin(), values.end(), table.data().begin());
  return table;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamSet& params) {
  out.write(kMagic.data(), kMagic.size());
  put_uint<std::uint32_t>(out, kCheckpointVersion);
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(params.num_topics()));
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(params.num_users()));
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(params.num_items()));
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(params.num_tags()));
  std::uint32_t flags = 0;
  if (params.social) flags |= kFlagSocial;
  if (params.content) flags |= kFlagContent;
  put_uint<std::uint32_t>(out, flags);
  put_uint<std::uint64_t>(out, params.seed);

  put_array(out, params.topic_prior);

  const auto& graph = *params.graph;
  std::vector<std::tuple<UserIndex, UserIndex, double>> triples;
  triples.reserve(graph.num_slots());
  for (UserIndex u = 0; u < graph.num_users(); ++u) {
    const auto friends = graph.friends(u);
    for (std::size_t s = 0; s < friends.size(); ++s) {
      triples.emplace_back(friends[s], u, params.influence[graph.offset(u) + s]);
    }
  }
  std::sort(triples.begin(), triples.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  put_uint<std::uint64_t>(out, triples.size());
  for (const auto& [f, u, value] : triples) {
    put_uint<std::uint32_t>(out, f);
    put_uint<std::uint32_t>(out, u);
    put_f64(out, value);
  }

  put_array(out, params.topic_user.data());
  put_array(out, params.topic_item.data());
  put_array(out, params.topic_tag.data());
  if (!out) throw DataError("failed writing checkpoint");
}

ParamSet read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("not a model checkpoint (bad magic)");
  }
  const auto version = get_uint<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::size_t k = get_uint<std::uint32_t>(in);
  const std::size_t n = get_uint<std::uint32_t>(in);
  const std::size_t m = get_uint<std::uint32_t>(in);
  const std::size_t w = get_uint<std::uint32_t>(in);
  const auto flags = get_uint<std::uint32_t>(in);

  ParamSet params;
  params.social = (flags & kFlagSocial) != 0;
  params.content = (flags & kFlagContent) != 0;
  params.seed = get_uint<std::uint64_t>(in);
  if (k == 0) throw DataError("checkpoint has zero topics");
  if (!params.content && w != 0) throw DataError("checkpoint has tags but content is off");

  params.topic_prior = get_array(in, k, "Pr(z)");

  const auto count = get_uint<std::uint64_t>(in);
  std::vector<std::vector<UserIndex>> lists(n);
  std::vector<std::vector<double>> values(n);
  std::pair<UserIndex, UserIndex> previous{0, 0};
  for (std::uint64_t t = 0; t < count; ++t) {
    const auto f = get_uint<std::uint32_t>(in);
    const auto u = get_uint<std::uint32_t>(in);
    const double value = get_f64(in);
    if (f >= n || u >= n) throw DataError("influence triple references unknown user");
    if (t > 0 && !(previous < std::pair{f, u})) {
      throw DataError("influence triples are not strictly sorted by (f, u)");
    }
    previous = {f, u};
    lists[u].push_back(f);
    values[u].push_back(value);
  }
  try {
    params.graph = std::make_shared<const FriendGraph>(lists);
  } catch (const ContractViolation& e) {
    throw DataError(std::string("invalid friend structure in checkpoint: ") + e.what());
  }
  params.influence.reserve(count);
  for (const auto& row : values) params.influence.insert(params.influence.end(), row.begin(), row.end());

  params.topic_user = to_table(k, n, get_array(in, k * n, "Pr(f|z)"));
  params.topic_item = to_table(k, m, get_array(in, k * m, "Pr(i|z)"));
  auto tags = get_array(in, k * w, "Pr(w|z)");
  if (params.content) params.topic_tag = to_table(k, w, tags);
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_checkpoint(out, params);
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace socialrec
