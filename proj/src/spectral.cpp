#include "areaprof/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "areaprof/errors.hpp"

namespace areaprof::spectral {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InputError("cosine_similarity: dimension mismatch");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) throw InputError("cosine_similarity: zero-norm vector");
    return std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb)));
}

namespace {

SimilarityGraph from_triplets(Eigen::Index n, std::vector<Eigen::Triplet<double>> triplets) {
    SimilarityGraph g;
    g.adjacency.resize(n, n);
    g.adjacency.setFromTriplets(triplets.begin(), triplets.end());
    g.adjacency.makeCompressed();
    g.degrees = Eigen::VectorXd::Zero(n);
    for (Eigen::Index c = 0; c < g.adjacency.outerSize(); ++c) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(g.adjacency, c); it; ++it) {
            g.degrees[it.row()] += it.value();
        }
    }
    return g;
}

}  // namespace

SimilarityGraph knn_graph(const Eigen::MatrixXd& rows, std::size_t neighbors) {
    const auto n = static_cast<std::size_t>(rows.rows());
    if (neighbors == 0) throw InputError("knn_graph: neighbour count must be positive");
    if (neighbors >= n) {
        throw InputError(fmt::format("knn_graph: K={} needs at least K+1 nodes, got {}", neighbors, n));
    }
    Eigen::VectorXd norms = rows.rowwise().norm();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(norms[static_cast<Eigen::Index>(i)] > 0.0)) {
            throw InputError(fmt::format("knn_graph: node {} has a zero vector", i));
        }
    }
    // Similarity of the unordered pair, always evaluated as (low, high) so
    // both directions see bitwise identical weights.
    auto similarity = [&](std::size_t i, std::size_t j) {
        const auto lo = static_cast<Eigen::Index>(std::min(i, j));
        const auto hi = static_cast<Eigen::Index>(std::max(i, j));
        const double dot = rows.row(lo).dot(rows.row(hi));
        return std::min(1.0, dot / (norms[lo] * norms[hi]));
    };

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(n * neighbors);
    std::vector<std::pair<double, std::size_t>> cand(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) cand[m++] = {similarity(i, j), j};
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(neighbors), cand.end(),
                          [](const auto& l, const auto& r) {
                              return l.first > r.first || (l.first == r.first && l.second < r.second);
                          });
        for (std::size_t t = 0; t < neighbors; ++t) {
            if (cand[t].first > 0.0) edges.emplace_back(std::min(i, cand[t].second), std::max(i, cand[t].second));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(edges.size() * 2);
    for (const auto& [i, j] : edges) {
        const double w = similarity(i, j);
        triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), w);
        triplets.emplace_back(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i), w);
    }
    return from_triplets(static_cast<Eigen::Index>(n), std::move(triplets));
}

SimilarityGraph knn_graph(std::span<const activity::ActivityVector> vectors, std::size_t neighbors) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(vectors.size()),
                         static_cast<Eigen::Index>(activity::kCategoryCount));
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = 0; j < activity::kCategoryCount; ++j) {
            rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i].weights[j];
        }
    }
    return knn_graph(rows, neighbors);
}

SimilarityGraph graph_from_adjacency(const Eigen::MatrixXd& adjacency) {
    if (adjacency.rows() != adjacency.cols()) throw InputError("adjacency must be square");
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
        for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
            const double w = adjacency(i, j);
            if (i == j && w != 0.0) throw InputError("adjacency diagonal must be zero");
            if (w < 0.0 || w != adjacency(j, i)) throw InputError("adjacency must be symmetric and non-negative");
            if (w > 0.0) triplets.emplace_back(i, j, w);
        }
    }
    return from_triplets(adjacency.rows(), std::move(triplets));
}

Eigen::MatrixXd normalized_laplacian(const SimilarityGraph& g) {
    const Eigen::Index n = g.size();
    Eigen::VectorXd inv_sqrt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(g.degrees[i] > 0.0)) {
            throw InputError(fmt::format("normalized_laplacian: node {} has zero degree", i));
        }
        inv_sqrt[i] = 1.0 / std::sqrt(g.degrees[i]);
    }
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index c = 0; c < g.adjacency.outerSize(); ++c) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(g.adjacency, c); it; ++it) {
            lap(it.row(), it.col()) -= it.value() * (inv_sqrt[it.row()] * inv_sqrt[it.col()]);
        }
    }
    return lap;
}

SpectralDecomposition decompose(const Eigen::MatrixXd& laplacian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    if (solver.info() != Eigen::Success) throw InputError("eigendecomposition did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

std::size_t eigengap_k(std::span<const double> eigenvalues, std::size_t k_max) {
    if (eigenvalues.size() < 2) throw InputError("eigengap_k needs at least two eigenvalues");
    if (k_max == 0) throw InputError("eigengap_k: k_max must be positive");
    const std::size_t limit = std::min(k_max, eigenvalues.size() - 1);
    std::size_t best = 1;
    double best_gap = eigenvalues[1] - eigenvalues[0];
    for (std::size_t i = 2; i <= limit; ++i) {
        const double gap = eigenvalues[i] - eigenvalues[i - 1];
        if (gap > best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return best;
}

Embedding spectral_embed(const SpectralDecomposition& decomp, std::size_t k, bool normalize_rows) {
    const Eigen::Index n = decomp.eigenvectors.rows();
    if (k == 0 || static_cast<Eigen::Index>(k) > n) {
        throw InputError(fmt::format("spectral_embed: k={} outside 1..{}", k, n));
    }
    Embedding emb;
    emb.rows = decomp.eigenvectors.leftCols(static_cast<Eigen::Index>(k));
    for (Eigen::Index c = 0; c < emb.rows.cols(); ++c) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < n; ++r) {
            const double mag = std::abs(emb.rows(r, c));
            if (mag > best) {
                best = mag;
                arg = r;
            }
        }
        if (emb.rows(arg, c) < 0.0) emb.rows.col(c) *= -1.0;
    }
    if (normalize_rows) {
        for (Eigen::Index r = 0; r < n; ++r) {
            const double norm = emb.rows.row(r).norm();
            if (norm > 1e-300) {
                emb.rows.row(r) /= norm;
            } else {
                emb.rows.row(r).setZero();
                emb.zero_rows.push_back(static_cast<std::size_t>(r));
            }
        }
    }
    return emb;
}

namespace {

double squared_distance(const Eigen::MatrixXd& points, Eigen::Index i, const Eigen::MatrixXd& centroids,
                        Eigen::Index c) {
    return (points.row(i) - centroids.row(c)).squaredNorm();
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, std::size_t k, std::mt19937_64& rng) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), points.cols());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto first = static_cast<Eigen::Index>(unit(rng) * static_cast<double>(n));
    first = std::min(first, n - 1);
    centroids.row(0) = points.row(first);
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = squared_distance(points, i, centroids, 0);
    for (std::size_t c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            (void)unit(rng);
        }
        centroids.row(static_cast<Eigen::Index>(c)) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& d = d2[static_cast<std::size_t>(i)];
            d = std::min(d, squared_distance(points, i, centroids, static_cast<Eigen::Index>(c)));
        }
    }
    return centroids;
}

void relabel_by_first_appearance(KMeansResult& r, std::size_t k) {
    std::vector<std::size_t> remap(k, k);
    std::size_t next = 0;
    for (auto label : r.labels) {
        if (remap[label] == k) remap[label] = next++;
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (remap[c] == k) remap[c] = next++;
    }
    Eigen::MatrixXd reordered(r.centroids.rows(), r.centroids.cols());
    for (std::size_t c = 0; c < k; ++c) {
        reordered.row(static_cast<Eigen::Index>(remap[c])) = r.centroids.row(static_cast<Eigen::Index>(c));
    }
    r.centroids = std::move(reordered);
    for (auto& label : r.labels) label = remap[label];
}

}  // namespace

KMeansResult kmeans_single(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iterations) {
    const Eigen::Index n = points.rows();
    if (k == 0 || static_cast<Eigen::Index>(k) > n) {
        throw InputError(fmt::format("kmeans: k={} must be in 1..{}", k, n));
    }
    std::mt19937_64 rng(seed);
    KMeansResult res;
    res.seed = seed;
    res.centroids = kmeanspp_init(points, k, rng);
    const auto un = static_cast<std::size_t>(n);
    std::vector<std::size_t> labels(un, k);
    std::vector<double> cost(un, 0.0);

    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        double objective = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = squared_distance(points, i, res.centroids, 0);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = squared_distance(points, i, res.centroids, static_cast<Eigen::Index>(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            const auto ui = static_cast<std::size_t>(i);
            changed = changed || labels[ui] != best;
            labels[ui] = best;
            cost[ui] = best_d;
            objective += best_d;
        }
        res.objective_trace.push_back(objective);
        if (!changed) break;

        // Update step.
        std::vector<std::size_t> sizes(k, 0);
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), points.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto c = labels[static_cast<std::size_t>(i)];
            sums.row(static_cast<Eigen::Index>(c)) += points.row(i);
            ++sizes[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) {
                res.centroids.row(static_cast<Eigen::Index>(c)) =
                    sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
            }
        }
        // Empty clusters take the point farthest from its own centroid.
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) continue;
            Eigen::Index far = -1;
            double far_d = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto own = labels[static_cast<std::size_t>(i)];
                if (sizes[own] < 2) continue;
                const double d = squared_distance(points, i, res.centroids, static_cast<Eigen::Index>(own));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far < 0) continue;
            const auto old = labels[static_cast<std::size_t>(far)];
            labels[static_cast<std::size_t>(far)] = c;
            --sizes[old];
            sizes[c] = 1;
            res.centroids.row(static_cast<Eigen::Index>(c)) = points.row(far);
            sums.row(static_cast<Eigen::Index>(old)) -= points.row(far);
            res.centroids.row(static_cast<Eigen::Index>(old)) =
                sums.row(static_cast<Eigen::Index>(old)) / static_cast<double>(sizes[old]);
        }
    }
    res.labels = std::move(labels);
    res.objective = res.objective_trace.back();
    relabel_by_first_appearance(res, k);
    return res;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
    if (options.restarts == 0) throw InputError("kmeans: restarts must be positive");
    std::optional<KMeansResult> best;
    for (std::size_t r = 0; r < options.restarts; ++r) {
        auto run = kmeans_single(points, k, seed + r, options.max_iterations);
        if (!best || std::tie(run.objective, run.seed) < std::tie(best->objective, best->seed)) {
            best = std::move(run);
        }
    }
    return std::move(*best);
}

ClusterModel cluster_areas(std::span<const activity::ActivityVector> vectors, const ClusterOptions& options) {
    const std::size_t n = vectors.size();
    if (n < 2) {
        throw DegenerateDataError(
            fmt::format("insufficient distinct profiles: {} profiled cell(s), spectral clustering needs at least 2", n));
    }
    if (n > options.max_nodes) {
        throw InputError(fmt::format("{} profiled cells exceed the dense eigensolver cap of {}", n, options.max_nodes));
    }
    ClusterModel model;
    model.seed = options.seed;
    model.restarts = options.kmeans.restarts;
    model.neighbors_used = std::min(options.neighbors, n - 1);
    model.labels.assign(n, kUnclustered);

    const auto full = knn_graph(vectors, model.neighbors_used);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (full.degrees[static_cast<Eigen::Index>(i)] > 0.0) {
            kept.push_back(i);
        } else {
            model.isolated.push_back(i);
        }
    }
    if (kept.size() < 2) {
        throw DegenerateDataError("insufficient distinct profiles: no two profiled cells share any activity");
    }

    SimilarityGraph graph;
    if (kept.size() == n) {
        graph = full;
    } else {
        std::vector<Eigen::Index> pos(n, -1);
        for (std::size_t i = 0; i < kept.size(); ++i) pos[kept[i]] = static_cast<Eigen::Index>(i);
        std::vector<Eigen::Triplet<double>> triplets;
        for (Eigen::Index c = 0; c < full.adjacency.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(full.adjacency, c); it; ++it) {
                triplets.emplace_back(pos[static_cast<std::size_t>(it.row())], pos[static_cast<std::size_t>(it.col())],
                                      it.value());
            }
        }
        graph = from_triplets(static_cast<Eigen::Index>(kept.size()), std::move(triplets));
    }

    const auto decomp = decompose(normalized_laplacian(graph));
    model.eigenvalues = decomp.eigenvalues;
    model.k_max_used = std::min(options.k_max, kept.size() - 1);
    model.k = eigengap_k(std::span<const double>(decomp.eigenvalues.data(), static_cast<std::size_t>(decomp.eigenvalues.size())),
                         model.k_max_used);
    const auto emb = spectral_embed(decomp, model.k, options.normalize_rows);
    auto km = kmeans(emb.rows, model.k, options.seed, options.kmeans);
    model.centroids = std::move(km.centroids);
    model.objective = km.objective;
    for (std::size_t i = 0; i < kept.size(); ++i) model.labels[kept[i]] = km.labels[i] + 1;
    return model;
}

}  // namespace areaprof::spectral
