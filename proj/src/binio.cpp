#include "advfilt/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace advfilt::binio {

void Writer::magic(std::string_view tag) { buf_.insert(buf_.end(), tag.begin(), tag.end()); }

void Writer::u8(std::uint8_t v) { buf_.push_back(v); }

void Writer::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::complex_array(std::span<const Complex> values) {
  for (const auto& c : values) {
    f64(c.real());
    f64(c.imag());
  }
}

void Writer::save(const std::filesystem::path& path) const { save_bytes(buf_, path); }

void save_bytes(std::span<const std::uint8_t> bytes, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Reader::Reader(std::vector<std::uint8_t> bytes, std::string origin)
    : buf_(std::move(bytes)), origin_(std::move(origin)) {}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Reader Reader::open(const std::filesystem::path& path) { return Reader(read_file(path), path.string()); }

void Reader::need(std::size_t n) {
  if (buf_.size() - pos_ < n) throw FormatError(origin_ + ": truncated file");
}

void Reader::expect_magic(std::string_view tag) {
  need(tag.size());
  if (std::memcmp(buf_.data() + pos_, tag.data(), tag.size()) != 0)
    throw FormatError(origin_ + ": bad magic, expected \"" + std::string(tag) + "\"");
  pos_ += tag.size();
}

std::uint8_t Reader::u8() {
  need(1);
  return buf_[pos_++];
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
  return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::vector<Complex> Reader::complex_array(std::size_t count) {
  need(count * 16);
  std::vector<Complex> out(count);
  for (auto& c : out) {
    const double re = f64();
    const double im = f64();
    c = {re, im};
  }
  return out;
}

}  // namespace advfilt::binio
