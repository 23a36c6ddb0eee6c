#pragma once

// Plain-text model checkpoints.
//
//   featreg-checkpoint 1
//   seed <u64>
//   dims <h0> <h1> ... <m>
//   W 0
//   <h1 rows of h0 values>
//   b 0
//   <h1 values on one line>
//   W 1
//   ...
//
// Values are written with 17 significant digits so a load restores the
// parameters bit for bit.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "featreg/trainer.hpp"

namespace featreg {

struct Checkpoint {
  Params params;
  std::uint64_t seed = 0;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace featreg
