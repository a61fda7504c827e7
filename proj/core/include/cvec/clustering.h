// core/include/cvec/clustering.h
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

#ifndef CVEC_CLUSTERING_H_
#define CVEC_CLUSTERING_H_

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace cvec {

/// S_ij = (cos(x_i, x_j) + 1) / 2 with unit diagonal. Rows of `embeddings`
/// are the points; a zero row raises std::invalid_argument naming its index.
Eigen::MatrixXd cosine_affinity(const Eigen::MatrixXd& embeddings);

/// Row-wise soft threshold: entries strictly below the row's p-quantile
/// (piecewise linear with knots at (k + 0.5) / n) are multiplied by 0.01,
/// then the matrix is symmetrized with an elementwise max and the diagonal
/// reset to 1.
Eigen::MatrixXd refine_affinity(const Eigen::MatrixXd& affinity,
                                double threshold_p);

/// L = I - D^{-1/2} S D^{-1/2}.
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& affinity);

struct Spectrum {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column i pairs with values(i)
};
Spectrum symmetric_eigen(const Eigen::MatrixXd& m);

/// Largest eigengap of the normalized Laplacian spectrum, searched over
/// k = 1..min(k_max, N-1). Returns 1 for N < 2.
int estimate_k(const Eigen::MatrixXd& refined_affinity, int k_max);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;
  double inertia = 0.0;
};
/// Lloyd iterations from k-means++ seeds; the best of `restarts` runs by
/// inertia is kept. Deterministic given `seed`.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts,
                    std::uint64_t seed, int max_iter = 300);

struct ClusterOptions {
  double threshold_p = 0.5;
  std::optional<int> k_override;
  int k_max = 10;
  int restarts = 10;
  std::uint64_t seed = 0;
};

struct ClusterResult {
  std::vector<int> labels;
  int k = 1;
  std::vector<double> eigenvalues;
};

/// Spectral clustering: cosine affinity, refinement, normalized Laplacian,
/// k from the eigengap unless overridden, row-normalized bottom-k
/// eigenvectors clustered with k-means. Labels are renumbered by first
/// appearance.
ClusterResult cluster(const Eigen::MatrixXd& embeddings,
                      const ClusterOptions& options);

}  // namespace cvec

#endif  // CVEC_CLUSTERING_H_
