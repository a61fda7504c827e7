// core/include/cvec/fmat.h
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

#ifndef CVEC_FMAT_H_
#define CVEC_FMAT_H_

#include <filesystem>
#include <iosfwd>

#include "cvec/tensor.h"

namespace cvec {

/// FMAT binary layout, all little-endian:
///   "FMAT" | u32 rank | rank x u32 dims | f32 payload (row-major)
/// Values are narrowed to f32 on write and widened on read.
void write_fmat(std::ostream& os, const Tensor& t);
Tensor read_fmat(std::istream& is);

void save_fmat(const std::filesystem::path& path, const Tensor& t);
Tensor load_fmat(const std::filesystem::path& path);

/// Raised for truncated or malformed FMAT data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cvec

#endif  // CVEC_FMAT_H_
