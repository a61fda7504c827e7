// core/src/params.cc
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

#include "cvec/params.h"

#include <cmath>
#include <stdexcept>

namespace cvec {

Tensor& ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  if (!value.requires_grad()) {
    value = Tensor(value.shape(), {value.data().begin(), value.data().end()},
                   true);
  }
  entries_.emplace_back(std::move(name), std::move(value));
  return entries_.back().second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named " + name);
}

Tensor& ParameterSet::get(const std::string& name) {
  for (auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& entry : entries_) {
    if (entry.first == name) return true;
  }
  return false;
}

void ParameterSet::extend(const std::string& prefix,
                          const ParameterSet& other) {
  for (const auto& [n, t] : other.entries_) {
    if (contains(prefix + n)) {
      throw std::invalid_argument("duplicate parameter " + prefix + n);
    }
    entries_.emplace_back(prefix + n, t);
  }
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& entry : entries_) out.push_back(entry.second);
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& entry : entries_) n += entry.second.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& entry : entries_) entry.second.zero_grad();
}

void ParameterSet::assign_from(const ParameterSet& source) {
  for (auto& [name, t] : entries_) {
    const Tensor& src = source.get(name);
    if (src.shape() != t.shape()) {
      throw DimensionError("parameter " + name + ": shape " +
                           shape_to_string(src.shape()) + " does not match " +
                           shape_to_string(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(src.data().begin(), src.data().end(), dst.begin());
  }
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng,
                      double gain) {
  const double limit =
      gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> data(fan_in * fan_out);
  for (double& v : data) v = dist(rng);
  return Tensor({fan_in, fan_out}, std::move(data), true);
}

}  // namespace cvec
