#pragma once

// Little-endian primitives shared by the dataset, checkpoint and channel
// block formats.

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ifenn::binio {

void write_u8(std::ostream& os, std::uint8_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64_block(std::ostream& os, std::span<const double> values);
void write_string(std::ostream& os, const std::string& s);
void write_magic(std::ostream& os, const char (&magic)[5]);

std::uint8_t read_u8(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
void read_f64_block(std::istream& is, std::span<double> out);
std::vector<double> read_f64_block(std::istream& is, std::size_t count);
std::string read_string(std::istream& is);
/// Throws FormatError when the next four bytes differ from `magic`.
void expect_magic(std::istream& is, const char (&magic)[5]);

}  // namespace ifenn::binio
