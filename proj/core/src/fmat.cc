// core/src/fmat.cc
//
// Copyright 2026 The cvec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "cvec/fmat.h"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace cvec {
namespace {

constexpr std::array<char, 4> kMagic = {'F', 'M', 'A', 'T'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b = {
      static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
      static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError("FMAT: truncated data");
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_fmat(std::ostream& os, const Tensor& t) {
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_u32(os, static_cast<std::uint32_t>(d));
  for (double v : t.data()) {
    put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!os) throw FormatError("FMAT: write failed");
}

Tensor read_fmat(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("FMAT: bad magic");
  }
  const std::uint32_t rank = get_u32(is);
  if (rank > 8) throw FormatError("FMAT: implausible rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) {
    d = get_u32(is);
    if (d == 0) throw FormatError("FMAT: zero dimension");
  }
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) {
    v = static_cast<double>(std::bit_cast<float>(get_u32(is)));
  }
  return Tensor(std::move(shape), std::move(data));
}

void save_fmat(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_fmat(os, t);
}

Tensor load_fmat(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_fmat(is);
}

}  // namespace cvec
