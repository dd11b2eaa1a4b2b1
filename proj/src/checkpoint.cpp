#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mhne/error.hpp"
#include "mhne/hopfield.hpp"

namespace mhne {

namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

void put_f64(std::ostream& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

void write_matrix(std::ostream& out, const Matrix& a) {
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) put_f64(out, a(r, c));
}

void read_matrix(std::istream& in, Matrix& a, const char* name) {
  char buf[8];
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (!in.read(buf, 8))
        fail(ErrorKind::Format, std::string("checkpoint truncated inside ") + name);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i)
        bits |= std::uint64_t{static_cast<unsigned char>(buf[i])} << (8 * i);
      a(r, c) = std::bit_cast<double>(bits);
    }
}

}  // namespace

void save_checkpoint(const ModelParams& p, std::ostream& out) {
  p.validate();
  out.write(kCheckpointMagic, kMagicLen);
  out.put(static_cast<char>(kCheckpointVersion));
  std::ostringstream header;
  header << std::setprecision(17) << p.memories() << ' ' << p.nodes() << ' ' << p.beta1
         << ' ' << p.beta2 << ' ' << p.alpha << '\n';
  out << header.str();
  write_matrix(out, p.phi_target);
  write_matrix(out, p.psi_context);
  if (!out) fail(ErrorKind::Internal, "failed writing checkpoint");
}

ModelParams load_checkpoint(std::istream& in) {
  char magic[kMagicLen];
  if (!in.read(magic, kMagicLen) || std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0)
    fail(ErrorKind::Format, "not a checkpoint file (bad magic)");
  int version = in.get();
  if (version != kCheckpointVersion)
    fail(ErrorKind::Format, "unsupported checkpoint version " + std::to_string(version));

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Format, "checkpoint header missing");
  std::istringstream header(line);
  long long k = 0, m = 0;
  ModelParams p;
  if (!(header >> k >> m >> p.beta1 >> p.beta2 >> p.alpha) || k < 1 || m < 1)
    fail(ErrorKind::Format, "malformed checkpoint header '" + line + "'");
  if (k > (1 << 24) || m > (1 << 28) || k * m > (1LL << 32))
    fail(ErrorKind::Format, "checkpoint header dimensions implausible");

  p.phi_target.resize(k, m);
  p.psi_context.resize(k, m);
  read_matrix(in, p.phi_target, "Phi_target");
  read_matrix(in, p.psi_context, "Psi_context");
  if (in.peek() != std::char_traits<char>::eof())
    fail(ErrorKind::Format, "trailing bytes after checkpoint payload");
  try {
    p.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Format, std::string("checkpoint contents invalid: ") + e.what());
  }
  return p;
}

void save_checkpoint_file(const ModelParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::InvalidArgument, "cannot open for writing: " + path);
  save_checkpoint(p, out);
}

ModelParams load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, "file not found: " + path);
  return load_checkpoint(in);
}

}  // namespace mhne
