#include "ppmu/coding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace ppmu {

std::vector<std::uint64_t> quantize_conditional(const Dist& d) {
  const std::uint64_t T = CodecParams::total;
  const std::uint64_t F = CodecParams::floor_mass;
  const std::uint32_t D = d.size();
  std::vector<std::uint64_t> mass(D);
  std::uint64_t sum = 0;
  for (std::uint32_t a = 0; a < D; ++a) {
    double scaled = d.probs[a] * static_cast<double>(T);
    double clamped = std::min(scaled, static_cast<double>(T));
    mass[a] = static_cast<std::uint64_t>(clamped);
    sum += mass[a];
  }
  // put the rounding deficit on the largest mass: relative distortion there
  // is O(D^2 / T)
  std::size_t largest = std::max_element(mass.begin(), mass.end()) - mass.begin();
  mass[largest] += T - sum;
  // enforce the floor, stealing from the largest mass
  for (std::uint32_t a = 0; a < D; ++a) {
    if (mass[a] < F) {
      std::uint64_t need = F - mass[a];
      largest = std::max_element(mass.begin(), mass.end()) - mass.begin();
      if (mass[largest] < F + need) throw SpecError("quantize: distribution too flat for the floor");
      mass[largest] -= need;
      mass[a] = F;
    }
  }
  return mass;
}

namespace {

constexpr std::uint64_t kRenormThreshold = 1ull << 56;

// Carry-counting byte-oriented range encoder: 64-bit range, 64-bit low with
// the carry tracked in bit 64, deferred 0xFF bytes resolved on emission.
class RangeEncoder {
 public:
  explicit RangeEncoder(std::vector<std::uint8_t>& out) : out_(out) {}

  void encode(std::uint64_t cum, std::uint64_t freq) {
    std::uint64_t r = range_ >> CodecParams::quant_bits;
    low_ += static_cast<unsigned __int128>(cum) * r;
    range_ = r * freq;
    while (range_ < kRenormThreshold) {
      shift_low();
      range_ <<= 8;
    }
  }

  void finish() {
    for (int i = 0; i < 8; ++i) shift_low();
    if (started_) out_.push_back(cache_);
    for (; pending_; --pending_) out_.push_back(0xFF);
  }

 private:
  void shift_low() {
    std::uint32_t carry = static_cast<std::uint32_t>(low_ >> 64);
    std::uint64_t lo = static_cast<std::uint64_t>(low_);
    if (carry || lo < 0xFF00000000000000ull) {
      if (started_) out_.push_back(static_cast<std::uint8_t>(cache_ + carry));
      for (; pending_; --pending_) out_.push_back(static_cast<std::uint8_t>(0xFF + carry));
      cache_ = static_cast<std::uint8_t>(lo >> 56);
      started_ = true;
    } else {
      ++pending_;
    }
    low_ = static_cast<unsigned __int128>(lo << 8);
  }

  std::vector<std::uint8_t>& out_;
  unsigned __int128 low_ = 0;
  std::uint64_t range_ = ~0ull;
  std::uint8_t cache_ = 0;
  std::uint64_t pending_ = 0;
  bool started_ = false;
};

// Decoder tracks code-minus-low, which makes carries vanish.
class RangeDecoder {
 public:
  RangeDecoder(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {
    for (int i = 0; i < 8; ++i) cml_ = (cml_ << 8) | next_byte();
  }

  std::uint64_t decode_target() {
    r_ = range_ >> CodecParams::quant_bits;
    std::uint64_t t = cml_ / r_;
    return std::min<std::uint64_t>(t, CodecParams::total - 1);
  }

  void consume(std::uint64_t cum, std::uint64_t freq) {
    cml_ -= cum * r_;
    range_ = r_ * freq;
    while (range_ < kRenormThreshold) {
      cml_ = (cml_ << 8) | next_byte();
      range_ <<= 8;
    }
  }

 private:
  std::uint8_t next_byte() {
    if (p_ == end_) throw FormatError("compressed blob: truncated payload");
    return *p_++;
  }

  const std::uint8_t* p_;
  const std::uint8_t* end_;
  std::uint64_t range_ = ~0ull;
  std::uint64_t cml_ = 0;
  std::uint64_t r_ = 0;
};

constexpr char kMagic[4] = {'P', 'P', 'M', 'U'};
constexpr std::size_t kHeaderBytes = 4 + 1 + 1 + 2 + 4 + 4 + 8 + 8 + 8;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

PpmConfig BlobHeader::to_config() const {
  PpmConfig cfg;
  cfg.alphabet = Alphabet(alphabet_size);
  cfg.mode = mode;
  cfg.max_order = max_order;
  cfg.alpha = alpha;
  cfg.full_length_limit = std::max<std::uint64_t>(length, 4096);
  cfg.validate();
  return cfg;
}

std::vector<std::uint8_t> CompressedBlob::to_bytes() const {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + payload.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(header.version);
  out.push_back(header.mode == PpmMode::full ? 0 : 1);
  put_u16(out, 0);  // reserved
  put_u32(out, header.alphabet_size);
  put_u32(out, header.max_order);
  put_u64(out, static_cast<std::uint64_t>(header.alpha.num));
  put_u64(out, static_cast<std::uint64_t>(header.alpha.den));
  put_u64(out, header.length);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

CompressedBlob CompressedBlob::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("compressed blob: header too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("compressed blob: bad magic");
  CompressedBlob blob;
  blob.header.version = bytes[4];
  if (blob.header.version != 1) throw FormatError("compressed blob: unsupported format version");
  if (bytes[5] > 1) throw FormatError("compressed blob: bad mode byte");
  blob.header.mode = bytes[5] == 0 ? PpmMode::full : PpmMode::capped;
  blob.header.alphabet_size = get_u32(bytes.data() + 8);
  blob.header.max_order = get_u32(bytes.data() + 12);
  std::int64_t anum = static_cast<std::int64_t>(get_u64(bytes.data() + 16));
  std::int64_t aden = static_cast<std::int64_t>(get_u64(bytes.data() + 24));
  if (aden == 0 || anum <= 0) throw FormatError("compressed blob: bad smoothing constant");
  blob.header.alpha = Rational(anum, aden);
  blob.header.length = get_u64(bytes.data() + 32);
  blob.payload.assign(bytes.begin() + kHeaderBytes, bytes.end());
  return blob;
}

CompressedBlob encode(const SymbolSeq& x, const PpmConfig& config,
                      std::vector<std::uint64_t>* state_digests) {
  config.validate();
  if (!(x.alphabet == config.alphabet)) throw SpecError("encode: sequence/config alphabet mismatch");
  CompressedBlob blob;
  blob.header.mode = config.mode;
  blob.header.alphabet_size = config.alphabet.size;
  blob.header.max_order = config.max_order;
  blob.header.alpha = config.alpha;
  blob.header.length = x.size();
  if (x.empty()) return blob;  // header-only

  PpmModel model(config);
  RangeEncoder enc(blob.payload);
  for (Symbol s : x.data) {
    Dist cond = model.conditional();
    std::vector<std::uint64_t> mass = quantize_conditional(cond);
    std::uint64_t cum = 0;
    for (Symbol a = 0; a < s; ++a) cum += mass[a];
    enc.encode(cum, mass[s]);
    model.step(s);
    if (state_digests) state_digests->push_back(model.state_digest());
  }
  enc.finish();
  return blob;
}

SymbolSeq decode(const CompressedBlob& blob, std::vector<std::uint64_t>* state_digests) {
  PpmConfig config = blob.header.to_config();
  SymbolSeq out(config.alphabet, {});
  if (blob.header.length == 0) return out;

  PpmModel model(config);
  RangeDecoder dec(blob.payload.data(), blob.payload.size());
  out.data.reserve(blob.header.length);
  for (std::uint64_t i = 0; i < blob.header.length; ++i) {
    Dist cond = model.conditional();
    std::vector<std::uint64_t> mass = quantize_conditional(cond);
    std::uint64_t target = dec.decode_target();
    std::uint64_t cum = 0;
    Symbol s = 0;
    while (s + 1 < config.alphabet.size && cum + mass[s] <= target) {
      cum += mass[s];
      ++s;
    }
    dec.consume(cum, mass[s]);
    out.data.push_back(s);
    model.step(s);
    if (state_digests) state_digests->push_back(model.state_digest());
  }
  return out;
}

CodelengthAudit codelength_audit(const SymbolSeq& x, const PpmConfig& config) {
  CodelengthAudit audit;
  CompressedBlob blob = encode(x, config);
  audit.payload_bits = 8.0 * static_cast<double>(blob.payload.size());
  audit.model_bits = ppm_neg_log(x, config).neg_log2;
  audit.overhead = audit.payload_bits - audit.model_bits;
  return audit;
}

}  // namespace ppmu
