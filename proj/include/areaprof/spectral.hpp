#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "areaprof/activity.hpp"

namespace areaprof::spectral {

/// dot(a, b) / (|a| |b|). Throws InputError for a zero-norm vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Symmetric weighted graph over area cells.
struct SimilarityGraph {
    Eigen::SparseMatrix<double> adjacency;  // symmetric, zero diagonal
    Eigen::VectorXd degrees;

    Eigen::Index size() const { return adjacency.rows(); }
};

/// Each node links to its `neighbors` most cosine-similar nodes (ties to the
/// lower index); the edge set is the union of both directions. Zero-weight
/// candidates are not linked.
SimilarityGraph knn_graph(std::span<const activity::ActivityVector> vectors, std::size_t neighbors);

/// Same construction from raw feature rows.
SimilarityGraph knn_graph(const Eigen::MatrixXd& rows, std::size_t neighbors);

/// Graph from an explicit symmetric adjacency (tests, fixtures).
SimilarityGraph graph_from_adjacency(const Eigen::MatrixXd& adjacency);

/// L_n = I - D^{-1/2} A D^{-1/2}. Throws InputError for a zero-degree node.
Eigen::MatrixXd normalized_laplacian(const SimilarityGraph& g);

struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // column i pairs with eigenvalues[i]
};

/// Dense symmetric eigendecomposition.
SpectralDecomposition decompose(const Eigen::MatrixXd& laplacian);

/// argmax over i in 1..k_max of (lambda_{i+1} - lambda_i), 1-based, first
/// maximum wins. k_max is clamped to eigenvalues.size() - 1.
std::size_t eigengap_k(std::span<const double> eigenvalues, std::size_t k_max);

struct Embedding {
    Eigen::MatrixXd rows;              // n x k
    std::vector<std::size_t> zero_rows;  // rows that could not be normalized
};

/// First k eigenvectors as columns, each flipped so its largest-magnitude
/// entry is positive; rows optionally scaled to unit length.
Embedding spectral_embed(const SpectralDecomposition& decomp, std::size_t k, bool normalize_rows = true);

struct KMeansOptions {
    std::size_t restarts = 10;
    std::size_t max_iterations = 300;
};

struct KMeansResult {
    std::vector<std::size_t> labels;  // 0-based, relabelled by first appearance
    Eigen::MatrixXd centroids;         // k x dim, row c is cluster c
    double objective = 0.0;            // within-cluster sum of squares
    std::uint64_t seed = 0;            // seed of the winning restart
    std::vector<double> objective_trace;  // per Lloyd iteration of the winning restart
};

/// One k-means++ seeded Lloyd run.
KMeansResult kmeans_single(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iterations = 300);

/// Best of `restarts` runs with seeds seed..seed+restarts-1, ordered by
/// (objective, seed).
KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

struct ClusterOptions {
    std::size_t neighbors = 10;
    std::size_t k_max = 30;
    std::uint64_t seed = 0;
    bool normalize_rows = true;
    std::size_t max_nodes = 20000;
    KMeansOptions kmeans;
};

/// Cluster label 0 marks a node left out of clustering (no similar neighbour).
inline constexpr std::size_t kUnclustered = 0;

struct ClusterModel {
    std::size_t k = 0;
    std::vector<std::size_t> labels;  // per input vector, 1..k or kUnclustered
    Eigen::MatrixXd centroids;
    Eigen::VectorXd eigenvalues;       // spectrum of the clustered subgraph
    std::vector<std::size_t> isolated;  // input indices with zero degree
    std::size_t neighbors_used = 0;
    std::size_t k_max_used = 0;
    std::uint64_t seed = 0;
    std::size_t restarts = 0;
    double objective = 0.0;
};

/// knn graph -> normalized Laplacian -> eigengap k -> embedding -> k-means.
/// Throws DegenerateDataError with fewer than two clusterable profiles.
ClusterModel cluster_areas(std::span<const activity::ActivityVector> vectors,
                           const ClusterOptions& options = {});

}  // namespace areaprof::spectral
