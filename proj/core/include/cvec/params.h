// core/include/cvec/params.h
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

#ifndef CVEC_PARAMS_H_
#define CVEC_PARAMS_H_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cvec/tensor.h"

namespace cvec {

using Rng = std::mt19937_64;

/// Ordered collection of named trainable tensors. Insertion order is the
/// serialization order.
class ParameterSet {
 public:
  Tensor& add(std::string name, Tensor value);
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const;

  // Appends all of `other` with `prefix` prepended to each name.
  void extend(const std::string& prefix, const ParameterSet& other);

  std::vector<Tensor> tensors() const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  // Overwrites values (by name) from `source`; shapes must agree.
  void assign_from(const ParameterSet& source);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Uniform in +-gain*sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng,
                      double gain = 1.0);

}  // namespace cvec

#endif  // CVEC_PARAMS_H_
