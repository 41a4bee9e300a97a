#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "ifenn/binary_io.hpp"
#include "ifenn/coupling.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::coupling {

namespace fs = std::filesystem;

CouplingChannel::CouplingChannel(Transport t, std::string dir, std::chrono::milliseconds timeout)
    : transport_(t), dir_(std::move(dir)), timeout_(timeout) {}

CouplingChannel CouplingChannel::in_process() { return CouplingChannel(Transport::kInProcess, "", {}); }

CouplingChannel CouplingChannel::file(const std::string& directory, std::chrono::milliseconds timeout) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (!fs::is_directory(directory)) throw InvalidArgument("cannot create channel directory " + directory);
  return CouplingChannel(Transport::kFile, directory, timeout);
}

void CouplingChannel::expect(State s, const char* op) const {
  if (state_ == s) return;
  static const char* names[] = {"idle", "strain written", "strain read", "field written"};
  throw ProtocolError(std::string("channel: ") + op + " not allowed in state '" + names[int(state_)] +
                      "' (exchange " + std::to_string(sequence_ + 1) + ")");
}

std::string CouplingChannel::payload_path(const char* kind) const {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%03llu.bin", kind, static_cast<unsigned long long>(sequence_ + 1));
  return (fs::path(dir_) / name).string();
}

void CouplingChannel::put(const char* kind, std::span<const double> values, std::vector<double>& buffer) {
  if (transport_ == Transport::kInProcess) {
    buffer.assign(values.begin(), values.end());
    return;
  }
  const std::string path = payload_path(kind);
  {
    std::ofstream os(path, std::ios::binary);
    binio::write_u64(os, values.size());
    binio::write_f64_block(os, values);
    if (!os) throw InvalidArgument("channel: cannot write " + path);
  }
  std::ofstream ready(path + ".ready", std::ios::binary);
  binio::write_u8(ready, 1);
}

std::vector<double> CouplingChannel::take(const char* kind, std::vector<double>& buffer) {
  if (transport_ == Transport::kInProcess) return std::move(buffer);
  const std::string path = payload_path(kind);
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (!fs::exists(path + ".ready")) {
    if (std::chrono::steady_clock::now() > deadline) throw ProtocolError("channel: timed out waiting for " + path);
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ProtocolError("channel: ready marker without payload " + path);
  const auto n = binio::read_u64(is);
  auto values = binio::read_f64_block(is, n);
  fs::remove(path + ".ready");
  return values;
}

void CouplingChannel::write_strain(std::span<const double> values) {
  expect(State::kIdle, "write_strain");
  put("strain", values, strain_buf_);
  ++strain_writes_;
  state_ = State::kStrainReady;
}

std::vector<double> CouplingChannel::read_strain() {
  expect(State::kStrainReady, "read_strain");
  auto v = take("strain", strain_buf_);
  state_ = State::kAwaitField;
  return v;
}

void CouplingChannel::write_field(std::span<const double> values) {
  expect(State::kAwaitField, "write_field");
  put("field", values, field_buf_);
  state_ = State::kFieldReady;
}

std::vector<double> CouplingChannel::read_field() {
  expect(State::kFieldReady, "read_field");
  auto v = take("field", field_buf_);
  ++sequence_;
  state_ = State::kIdle;
  return v;
}

}  // namespace ifenn::coupling
