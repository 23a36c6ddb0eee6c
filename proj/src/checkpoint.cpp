#include "featreg/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "featreg/error.hpp"
#include "featreg/io.hpp"

namespace featreg {

namespace {

constexpr const char* kMagic = "featreg-checkpoint";
constexpr int kVersion = 1;

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw DataError("checkpoint: expected '" + word + "', got '" + got + "'");
}

double read_value(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw DataError("checkpoint: truncated");
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("checkpoint: bad value '" + tok + "'");
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  const auto& p = checkpoint.params;
  out << kMagic << ' ' << kVersion << '\n' << "seed " << checkpoint.seed << '\n' << "dims";
  for (Index h : p.dims()) out << ' ' << h;
  out << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const auto& L = p.layers[k];
    out << "W " << k << '\n';
    for (Index r = 0; r < L.W.rows(); ++r) {
      for (Index c = 0; c < L.W.cols(); ++c) out << (c ? " " : "") << L.W(r, c);
      out << '\n';
    }
    out << "b " << k << '\n';
    for (Index r = 0; r < L.b.size(); ++r) out << (r ? " " : "") << L.b(r);
    out << '\n';
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  expect(in, kMagic);
  int version = 0;
  if (!(in >> version) || version != kVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  expect(in, "seed");
  if (!(in >> ck.seed)) throw DataError("checkpoint: bad seed");
  expect(in, "dims");
  std::string line;
  std::getline(in, line);
  std::istringstream ls(line);
  std::vector<Index> dims;
  for (Index h; ls >> h;) {
    if (h < 1) throw DataError("checkpoint: dimensions must be positive");
    dims.push_back(h);
  }
  if (dims.size() < 2) throw DataError("checkpoint: need at least two dimensions");
  ck.params = Params::zeros(dims);
  for (std::size_t k = 0; k < ck.params.layers.size(); ++k) {
    auto& L = ck.params.layers[k];
    expect(in, "W");
    expect(in, std::to_string(k));
    for (Index r = 0; r < L.W.rows(); ++r)
      for (Index c = 0; c < L.W.cols(); ++c) L.W(r, c) = read_value(in);
    expect(in, "b");
    expect(in, std::to_string(k));
    for (Index r = 0; r < L.b.size(); ++r) L.b(r) = read_value(in);
  }
  if (!all_finite(ck.params)) throw DataError("checkpoint: non-finite parameters");
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ostringstream out;
  write_checkpoint(out, checkpoint);
  io::write_file_atomic(path, out.str());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace featreg
