// Bit-exact range coder driven by the PPM model: universal coding as a real
// compressor, with a code-length audit against -log2 PPM.
#pragma once

#include "ppmu/core.hpp"
#include "ppmu/ppm.hpp"

namespace ppmu {

struct CodecParams {
  static constexpr std::uint32_t quant_bits = 32;   // probability quantization width
  static constexpr std::uint32_t range_bits = 64;   // range register width
  static constexpr std::uint32_t floor_log2 = 20;   // per-symbol probability floor 2^-20
  static constexpr std::uint64_t total = 1ull << quant_bits;
  static constexpr std::uint64_t floor_mass = total >> floor_log2;
};

/// Quantizes a conditional distribution to integer masses summing exactly to
/// 2^32, each at least 2^12 (the 2^-20 floor). Shared verbatim by encoder
/// and decoder, so the coded measure is a well-defined approximation.
std::vector<std::uint64_t> quantize_conditional(const Dist& d);

struct BlobHeader {
  std::uint8_t version = 1;
  PpmMode mode = PpmMode::full;
  std::uint32_t alphabet_size = 0;
  std::uint32_t max_order = 0;
  Rational alpha{1, 1};
  std::uint64_t length = 0;

  PpmConfig to_config() const;
};

/// Header ("PPMU", little-endian, fixed layout) plus range-coded payload.
/// See docs/FORMAT.md; a golden test vector lives in tests/data.
struct CompressedBlob {
  BlobHeader header;
  std::vector<std::uint8_t> payload;

  std::vector<std::uint8_t> to_bytes() const;
  static CompressedBlob from_bytes(std::span<const std::uint8_t> bytes);
};

/// Deterministic encoding of x under the given model configuration.
/// Optionally records a per-symbol model-state digest (debug aid).
CompressedBlob encode(const SymbolSeq& x, const PpmConfig& config,
                      std::vector<std::uint64_t>* state_digests = nullptr);

/// Exact inverse of encode. Corrupt inputs raise FormatError (or produce a
/// wrong sequence when the corruption is undetectable) but never crash.
SymbolSeq decode(const CompressedBlob& blob, std::vector<std::uint64_t>* state_digests = nullptr);

struct CodelengthAudit {
  double payload_bits = 0.0;
  double model_bits = 0.0;  // -log2 PPM(x)
  double overhead = 0.0;    // payload_bits - model_bits
};

/// Audits payload length against the model's own code length; overhead must
/// land in [0, n 2^-16 + 64] bits.
CodelengthAudit codelength_audit(const SymbolSeq& x, const PpmConfig& config);

}  // namespace ppmu
