#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "potwell/field.hpp"

namespace potwell {

namespace {

constexpr std::size_t kHeaderBytes = 32;
constexpr char kMagic[4] = {'P', 'W', 'F', '1'};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

template <class T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(in[offset + b]) << (8 * b);
  return std::bit_cast<T>(bits);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ScalarField& u, std::uint64_t sample_count, double time) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 8 * u.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_le(out, static_cast<std::uint32_t>(u.grid().m()));
  put_le(out, sample_count);
  put_le(out, time);
  out.insert(out.end(), 8, std::uint8_t{0});
  for (double x : u.values()) put_le(out, x);
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw std::runtime_error("checkpoint: truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic");
  const auto m = get_le<std::uint32_t>(bytes, 4);
  if (m < 4 || m > 4096) throw std::runtime_error("checkpoint: implausible grid size " + std::to_string(m));
  const GridSpec grid(static_cast<int>(m));
  if (bytes.size() != kHeaderBytes + 8 * grid.size())
    throw std::runtime_error("checkpoint: bad length (expected " + std::to_string(kHeaderBytes + 8 * grid.size()) +
                             " bytes, got " + std::to_string(bytes.size()) + ")");
  std::vector<double> values(grid.size());
  for (std::size_t n = 0; n < values.size(); ++n) values[n] = get_le<double>(bytes, kHeaderBytes + 8 * n);
  return Checkpoint{ScalarField(grid, std::move(values)), get_le<std::uint64_t>(bytes, 8), get_le<double>(bytes, 16)};
}

void write_checkpoint(const std::filesystem::path& path, const ScalarField& u, std::uint64_t sample_count,
                      double time) {
  const auto bytes = encode_checkpoint(u, sample_count, time);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp.string());
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace potwell
