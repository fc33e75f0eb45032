// Little-endian primitive readers/writers for snapshot and blob formats.
#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "ppmu/core.hpp"

namespace ppmu::detail {

inline void write_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void write_i64(std::ostream& out, std::int64_t v) {
  write_u64(out, static_cast<std::uint64_t>(v));
}

inline void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint8_t read_u8(std::istream& in) {
  int c = in.get();
  if (c == EOF) throw FormatError("unexpected end of stream");
  return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(read_u8(in)) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(read_u8(in)) << (8 * i);
  return v;
}

inline std::int64_t read_i64(std::istream& in) {
  return static_cast<std::int64_t>(read_u64(in));
}

inline double read_f64(std::istream& in) {
  return std::bit_cast<double>(read_u64(in));
}

}  // namespace ppmu::detail
