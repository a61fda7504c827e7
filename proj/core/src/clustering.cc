// core/src/clustering.cc
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

#include "cvec/clustering.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace cvec {

Eigen::MatrixXd cosine_affinity(const Eigen::MatrixXd& embeddings) {
  const Eigen::Index n = embeddings.rows();
  Eigen::MatrixXd unit = embeddings;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embeddings.row(i).norm();
    if (norm == 0.0) {
      throw std::invalid_argument("cosine_affinity: embedding " +
                                  std::to_string(i) + " is the zero vector");
    }
    unit.row(i) /= norm;
  }
  Eigen::MatrixXd s = (unit * unit.transpose()).array().max(-1.0).min(1.0);
  s = (s.array() + 1.0) / 2.0;
  s.diagonal().setOnes();
  return s;
}

Eigen::MatrixXd refine_affinity(const Eigen::MatrixXd& affinity,
                                double threshold_p) {
  if (!(threshold_p > 0.0 && threshold_p < 1.0)) {
    throw std::invalid_argument("refine_affinity: p must lie in (0, 1)");
  }
  const Eigen::Index n = affinity.rows();
  Eigen::MatrixXd out = affinity;
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = affinity(i, j);
    std::sort(row.begin(), row.end());
    // Piecewise-linear quantile with knots at (k + 0.5) / n, so a small p
    // clamps to the row minimum and suppresses nothing.
    const double pos = std::clamp(threshold_p * static_cast<double>(n) - 0.5, 0.0,
                                  static_cast<double>(n - 1));
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, row.size() - 1);
    const double q = row[lo] + (pos - static_cast<double>(lo)) * (row[hi] - row[lo]);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (affinity(i, j) < q) out(i, j) = affinity(i, j) * 0.01;
    }
  }
  Eigen::MatrixXd sym = out.cwiseMax(out.transpose());
  sym.diagonal().setOnes();
  return sym;
}

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& affinity) {
  const Eigen::VectorXd degree = affinity.rowwise().sum();
  Eigen::VectorXd inv_sqrt(degree.size());
  for (Eigen::Index i = 0; i < degree.size(); ++i) {
    inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  Eigen::MatrixXd l = -(inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal());
  l.diagonal().array() += 1.0;
  // Exact symmetry for the self-adjoint solver.
  return (l + l.transpose()) / 2.0;
}

Spectrum symmetric_eigen(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

int eigengap_k(const Eigen::VectorXd& values, int k_max) {
  const int n = static_cast<int>(values.size());
  if (n < 2) return 1;
  const int limit = std::min(k_max, n - 1);
  int best = 1;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= limit; ++k) {
    const double gap = values(k) - values(k - 1);
    if (gap > best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

}  // namespace

int estimate_k(const Eigen::MatrixXd& refined_affinity, int k_max) {
  if (k_max < 1) throw std::invalid_argument("estimate_k: k_max must be >= 1");
  if (refined_affinity.rows() < 2) return 1;
  return eigengap_k(symmetric_eigen(normalized_laplacian(refined_affinity)).values,
                    k_max);
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts,
                    std::uint64_t seed, int max_iter) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) {
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) +
                                " invalid for " + std::to_string(n) + " points");
  }
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int run = 0; run < std::max(1, restarts); ++run) {
    // k-means++ seeding.
    Eigen::MatrixXd centers(k, points.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = points.row(first(rng));
    Eigen::VectorXd d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double total = d2.sum();
      Eigen::Index pick = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double r = u(rng);
        for (pick = 0; pick < n - 1; ++pick) {
          r -= d2(pick);
          if (r <= 0.0) break;
        }
      } else {
        pick = first(rng);
      }
      centers.row(c) = points.row(pick);
      d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
      bool changed = false;
      inertia = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        int arg = 0;
        double dmin = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = (points.row(i) - centers.row(c)).squaredNorm();
          if (d < dmin) {
            dmin = d;
            arg = c;
          }
        }
        inertia += dmin;
        if (labels[static_cast<std::size_t>(i)] != arg) {
          labels[static_cast<std::size_t>(i)] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        sums.row(c) += points.row(i);
        ++counts[static_cast<std::size_t>(c)];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
          centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        } else {
          // Re-seed an empty cluster at the point farthest from its center.
          Eigen::Index far = 0;
          double dfar = -1.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double d =
                (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)]))
                    .squaredNorm();
            if (d > dfar) {
              dfar = d;
              far = i;
            }
          }
          centers.row(c) = points.row(far);
        }
      }
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = labels;
      best.centers = centers;
    }
  }
  return best;
}

ClusterResult cluster(const Eigen::MatrixXd& embeddings,
                      const ClusterOptions& options) {
  const Eigen::Index n = embeddings.rows();
  if (n < 1) throw std::invalid_argument("cluster: no embeddings");
  ClusterResult result;
  if (n == 1) {
    result.labels = {0};
    result.k = 1;
    result.eigenvalues = {0.0};
    return result;
  }
  const Eigen::MatrixXd refined =
      refine_affinity(cosine_affinity(embeddings), options.threshold_p);
  const Spectrum spec = symmetric_eigen(normalized_laplacian(refined));
  result.eigenvalues.assign(spec.values.data(),
                            spec.values.data() + spec.values.size());
  int k = options.k_override ? *options.k_override
                             : eigengap_k(spec.values, options.k_max);
  k = std::clamp(k, 1, static_cast<int>(n));
  result.k = k;

  Eigen::MatrixXd embed = spec.vectors.leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > 0.0) embed.row(i) /= norm;
  }
  const KMeansResult km = kmeans(embed, k, options.restarts, options.seed);

  // Renumber by first appearance and drop empty clusters.
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next = 0;
  result.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int& slot = remap[static_cast<std::size_t>(km.labels[static_cast<std::size_t>(i)])];
    if (slot < 0) slot = next++;
    result.labels[static_cast<std::size_t>(i)] = slot;
  }
  result.k = next;
  return result;
}

}  // namespace cvec
