// Copyright (c) 2026 The xvmtl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitives shared by every binary file format.

#ifndef XVMTL_BINARY_IO_H_
#define XVMTL_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "xvmtl/errors.h"

namespace xvmtl::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void WritePod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::istream& is, const char* what) {
  T value;
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw TruncatedError(std::string("truncated while reading ") + what);
  }
  return value;
}

inline void WriteMagic(std::ostream& os, const char (&magic)[5]) {
  os.write(magic, 4);
}

inline void ExpectMagic(std::istream& is, const char (&magic)[5],
                        const std::string& source) {
  char buf[4];
  if (!is.read(buf, 4)) throw TruncatedError(source + ": missing magic");
  if (std::memcmp(buf, magic, 4) != 0) {
    throw BadMagicError(source + ": bad magic '" + std::string(buf, 4) +
                        "', expected '" + magic + "'");
  }
}

inline void WriteString(std::ostream& os, const std::string& s) {
  WritePod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string ReadString(std::istream& is, const char* what) {
  const auto size = ReadPod<std::uint32_t>(is, what);
  std::string s(size, '\0');
  if (size && !is.read(s.data(), size)) {
    throw TruncatedError(std::string("truncated while reading ") + what);
  }
  return s;
}

template <typename T>
void WriteArray(std::ostream& os, std::span<const T> values) {
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size_bytes()));
}

template <typename T>
void ReadArray(std::istream& is, std::span<T> out, const char* what) {
  if (!is.read(reinterpret_cast<char*>(out.data()),
               static_cast<std::streamsize>(out.size_bytes()))) {
    throw TruncatedError(std::string("truncated while reading ") + what);
  }
}

// Tensor framing: u32 rank, rank x u32 dims, then float32 payload.
void WriteFloatTensor(std::ostream& os, const std::vector<std::size_t>& shape,
                      std::span<const float> values);
std::vector<float> ReadFloatTensor(std::istream& is,
                                   const std::vector<std::size_t>& expected,
                                   const std::string& name);

// Same framing with float64 payload, used by the backend file.
void WriteDoubleTensor(std::ostream& os, const std::vector<std::size_t>& shape,
                       std::span<const double> values);
std::vector<double> ReadDoubleTensor(std::istream& is,
                                     std::vector<std::size_t>* shape,
                                     const std::string& name);

}  // namespace xvmtl::binary

#endif  // XVMTL_BINARY_IO_H_
