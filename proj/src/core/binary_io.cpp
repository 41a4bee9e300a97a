#include "ifenn/binary_io.hpp"

#include <array>
#include <bit>
#include <cstring>

#include "ifenn/errors.hpp"

namespace ifenn::binio {
namespace {

template <typename U>
void put_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  os.write(bytes.data(), bytes.size());
  if (!os) throw FormatError("write failed");
}

template <typename U>
U get_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (is.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError("unexpected end of file");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void write_u8(std::ostream& os, std::uint8_t v) { put_le(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }

void write_f64_block(std::ostream& os, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
    if (!os) throw FormatError("write failed");
  } else {
    for (double v : values) put_le(os, std::bit_cast<std::uint64_t>(v));
  }
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

std::uint8_t read_u8(std::istream& is) { return get_le<std::uint8_t>(is); }
std::uint32_t read_u32(std::istream& is) { return get_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get_le<std::uint64_t>(is); }

void read_f64_block(std::istream& is, std::span<double> out) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()));
    if (is.gcount() != static_cast<std::streamsize>(out.size_bytes())) {
      throw FormatError("truncated float block");
    }
  } else {
    for (double& v : out) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
  }
}

std::vector<double> read_f64_block(std::istream& is, std::size_t count) {
  std::vector<double> out(count);
  read_f64_block(is, std::span<double>(out));
  return out;
}

std::string read_string(std::istream& is) {
  const auto n = read_u32(is);
  if (n > (1u << 20)) throw FormatError("string length out of range");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (is.gcount() != static_cast<std::streamsize>(n)) throw FormatError("truncated string");
  return s;
}

void expect_magic(std::istream& is, const char (&magic)[5]) {
  char got[4] = {};
  is.read(got, 4);
  if (is.gcount() != 4 || std::memcmp(got, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace ifenn::binio
