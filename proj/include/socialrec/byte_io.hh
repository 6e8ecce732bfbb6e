// Apache License, Version 2.0, refer to LICENSE.txt
//
// Little-endian primitives for the binary formats.

#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "socialrec/error.hh"

namespace socialrec::byte_io {

template <class UInt>
void put_uint(std::ostream& out, UInt value) {
  char bytes[sizeof(UInt)];
  for (std::size_t b = 0; b < sizeof(UInt); ++b) {
    bytes[b] = static_cast<char>((value >> (8 * b)) & 0xff);
  }
  out.write(bytes, sizeof(UInt));
}

template <class UInt>
UInt get_uint(std::istream& in) {
  unsigned char bytes[sizeof(UInt)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) {
    throw DataError("unexpected end of binary stream");
  }
  UInt value = 0;
  for (std::size_t b = 0; b < sizeof(UInt); ++b) value |= static_cast<UInt>(bytes[b]) << (8 * b);
  return value;
}

inline void put_f64(std::ostream& out, double value) {
  put_uint<std::uint64_t>(out, std::bit_cast<std::uint64_t>(value));
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_uint<std::uint64_t>(in)); }

}  // namespace socialrec::byte_io
