#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cpi/error.hpp"
#include "cpi/speckle.hpp"

namespace cpi {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'I', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <class T>
void put(std::ofstream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated frame file header");
  return to_little(v);
}

}  // namespace

// Header layout: magic[4], u32 version, u64 n_frames, u32 dims (1 or 2),
// u64 n_a, u64 n_b (samples per axis), f64 pitch_a, f64 pitch_b.
void write_frames(const std::string& path, const FrameEnsemble& ens) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open frame file for writing: " + path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, ens.n_frames);
  put<std::uint32_t>(out, ens.dim == Dim::Plane2D ? 2u : 1u);
  put<std::uint64_t>(out, ens.ax.n);
  put<std::uint64_t>(out, ens.bx.n);
  put<double>(out, ens.ax.pitch);
  put<double>(out, ens.bx.pitch);
  for (std::size_t f = 0; f < ens.n_frames; ++f) {
    for (double v : ens.frame_a(f)) put<double>(out, v);
    for (double v : ens.frame_b(f)) put<double>(out, v);
  }
  if (!out) throw IoError("write failed: " + path);
}

FrameEnsemble read_frames(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open frame file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a CPIF frame file: " + path);
  if (get<std::uint32_t>(in) != kVersion) throw IoError("unsupported frame file version");
  FrameEnsemble ens;
  ens.n_frames = get<std::uint64_t>(in);
  const auto dims = get<std::uint32_t>(in);
  if (dims != 1 && dims != 2) throw IoError("invalid dimension count in frame file");
  ens.dim = dims == 2 ? Dim::Plane2D : Dim::Slice1D;
  ens.ax.n = get<std::uint64_t>(in);
  ens.bx.n = get<std::uint64_t>(in);
  ens.ax.pitch = get<double>(in);
  ens.bx.pitch = get<double>(in);
  const std::size_t na = ens.pixels_a(), nb = ens.pixels_b();
  ens.ia.resize(ens.n_frames * na);
  ens.ib.resize(ens.n_frames * nb);
  for (std::size_t f = 0; f < ens.n_frames; ++f) {
    for (std::size_t i = 0; i < na; ++i) ens.ia[f * na + i] = get<double>(in);
    for (std::size_t i = 0; i < nb; ++i) ens.ib[f * nb + i] = get<double>(in);
  }
  return ens;
}

}  // namespace cpi
