// Apache License, Version 2.0, refer to LICENSE.txt
//
// Binary model checkpoint. All integers and floats are little-endian.
//
//   magic      8 bytes  "SOCREC\x01\n"
//   version    u32      kCheckpointVersion
//   K N M W    u32 x 4
//   flags      u32      bit 0 social, bit 1 content
//   seed       u64
//   Pr(z)      u64 length, then f64 values
//   Pr(u|f)    u64 count, then (u32 f, u32 u, f64 value) sorted by (f, u)
//   Pr(f|z)    u64 length, then K*N f64 values, row-major by topic
//   Pr(i|z)    u64 length, then K*M f64 values
//   Pr(w|z)    u64 length, then K*W f64 values (length 0 when content is off)
//
// The friend graph is not stored separately; it is rebuilt from the
// influence triples.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "socialrec/model.hh"

namespace socialrec {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParamSet& params);
ParamSet read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace socialrec
