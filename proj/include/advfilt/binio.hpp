#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advfilt/types.hpp"

namespace advfilt::binio {

/// Little-endian byte sink.
class Writer {
 public:
  void magic(std::string_view tag);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void complex_array(std::span<const Complex> values);

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void save_bytes(std::span<const std::uint8_t> bytes, const std::filesystem::path& path);

/// Little-endian byte source. Truncation raises FormatError.
class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> bytes, std::string origin = {});
  static Reader open(const std::filesystem::path& path);

  void expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::vector<Complex> complex_array(std::size_t count);

  bool at_end() const { return pos_ == buf_.size(); }
  const std::string& origin() const { return origin_; }

 private:
  void need(std::size_t n);
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  std::string origin_;
};

}  // namespace advfilt::binio
