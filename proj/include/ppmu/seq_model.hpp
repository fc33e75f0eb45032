// Sequential probability model interface: anything that exposes a
// conditional distribution over the next symbol and can ingest symbols.
// PPM models, source wrappers and spoilt estimators all conform.
#pragma once

#include "ppmu/core.hpp"

namespace ppmu {

class SeqModel {
 public:
  virtual ~SeqModel() = default;

  virtual const Alphabet& alphabet() const = 0;
  /// Conditional distribution over the next symbol given everything
  /// ingested so far. Must be a valid Dist at every step.
  virtual Dist conditional() const = 0;
  /// Ingests the next symbol.
  virtual void step(Symbol a) = 0;
  /// Number of symbols ingested.
  virtual std::uint64_t length() const = 0;
};

}  // namespace ppmu
