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

#include "xvmtl/binary_io.h"

#include "xvmtl/autodiff.h"

namespace xvmtl::binary {

namespace {

template <typename T>
void WriteTensor(std::ostream& os, const std::vector<std::size_t>& shape,
                 std::span<const T> values) {
  WritePod<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) {
    WritePod<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  }
  WriteArray(os, values);
}

std::vector<std::size_t> ReadShape(std::istream& is, const std::string& name) {
  const auto rank = ReadPod<std::uint32_t>(is, name.c_str());
  if (rank > 8) throw ParseError(name + ": implausible rank " + std::to_string(rank));
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) d = ReadPod<std::uint32_t>(is, name.c_str());
  return shape;
}

}  // namespace

void WriteFloatTensor(std::ostream& os, const std::vector<std::size_t>& shape,
                      std::span<const float> values) {
  WriteTensor(os, shape, values);
}

std::vector<float> ReadFloatTensor(std::istream& is,
                                   const std::vector<std::size_t>& expected,
                                   const std::string& name) {
  const auto shape = ReadShape(is, name);
  if (shape != expected) {
    throw DimMismatchError(name + ": stored shape " + ad::ShapeToString(shape) +
                           " does not match expected " +
                           ad::ShapeToString(expected));
  }
  std::vector<float> values(ad::NumElements(shape));
  ReadArray<float>(is, values, name.c_str());
  return values;
}

void WriteDoubleTensor(std::ostream& os, const std::vector<std::size_t>& shape,
                       std::span<const double> values) {
  WriteTensor(os, shape, values);
}

std::vector<double> ReadDoubleTensor(std::istream& is,
                                     std::vector<std::size_t>* shape,
                                     const std::string& name) {
  *shape = ReadShape(is, name);
  std::vector<double> values(ad::NumElements(*shape));
  ReadArray<double>(is, values, name.c_str());
  return values;
}

}  // namespace xvmtl::binary
