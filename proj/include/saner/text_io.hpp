// Copyright 2026 The SANER Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small file and byte-level helpers shared by the readers and writers.

#ifndef SANER_TEXT_IO_HPP_
#define SANER_TEXT_IO_HPP_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace saner {

// Reads a UTF-8 text file into lines, stripping trailing '\r'.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Reads the whole file as one string. Throws FormatError if it cannot be
// opened.
std::string read_text(const std::filesystem::path& path);

// Reads the whole file as bytes. Throws FormatError if it cannot be opened.
std::vector<std::byte> read_bytes(const std::filesystem::path& path);

void write_bytes(const std::filesystem::path& path,
                 std::span<const std::byte> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

// Little-endian append-only byte buffer.
class ByteWriter {
 public:
  void u16(std::uint16_t v) { put(v, 2); }
  void i16(std::int16_t v) { put(static_cast<std::uint16_t>(v), 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s);

  const std::vector<std::byte>& bytes() const { return buf_; }

 private:
  void put(std::uint64_t v, int n);
  std::vector<std::byte> buf_;
};

// Little-endian cursor over a byte span. Every read past the end throws
// FormatError naming `what`.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> data) : data_(data) {}

  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(get(2, what)); }
  std::int16_t i16(const char* what) { return static_cast<std::int16_t>(u16(what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(const char* what) { return get(8, what); }
  float f32(const char* what) {
    return std::bit_cast<float>(static_cast<std::uint32_t>(get(4, what)));
  }
  double f64(const char* what) { return std::bit_cast<double>(get(8, what)); }
  std::string raw(std::size_t n, const char* what);

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::uint64_t get(int n, const char* what);
  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

}  // namespace saner

#endif  // SANER_TEXT_IO_HPP_
