#pragma once

// Generator network graphs, weighted Laplacians and their spectra.
//
// Networks are taken as already Kron-reduced: every vertex is a generator
// bus and every edge carries a positive coupling weight k_ij (susceptance
// scaled by the voltage magnitudes at both ends).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gridcoher {

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double k = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected, connected, positively weighted graph on buses 0..n-1.
/// Construction validates every invariant and throws Error(Graph) otherwise.
class NetworkGraph {
public:
    NetworkGraph(std::size_t n, std::vector<Edge> edges);

    std::size_t size() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    /// Relabels bus i as perm[i].
    NetworkGraph permuted(std::span<const std::size_t> perm) const;

private:
    std::size_t n_;
    std::vector<Edge> edges_;
};

/// [L]_ii = sum of incident weights, [L]_ij = -k_ij.
Eigen::MatrixXd build_laplacian(const NetworkGraph& graph);

struct LaplacianSpectrum {
    Eigen::VectorXd eigenvalues;  // ascending, eigenvalues(0) == 0
    Eigen::MatrixXd eigenbasis;   // orthonormal, column 0 == 1/sqrt(n)

    std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
    double lambda_max() const { return eigenvalues(eigenvalues.size() - 1); }
    double zero_tolerance() const;
    /// U diag(lambda) U^T
    Eigen::MatrixXd reconstruct() const;
};

/// Symmetric eigendecomposition of a graph Laplacian. The null eigenvector is
/// pinned to (1/sqrt(n)) 1_n and the remaining columns re-orthonormalized
/// against it.
LaplacianSpectrum spectrum(const Eigen::MatrixXd& laplacian);
LaplacianSpectrum spectrum(const NetworkGraph& graph);

/// Sum of 1/lambda_i over the nonzero Laplacian eigenvalues (the total
/// effective resistance divided by n).
double effective_resistance_sum(const LaplacianSpectrum& spec);

enum class GraphFamily { Complete, Path, Ring, Grid2d, RandomTree, ErdosRenyi };

GraphFamily parse_graph_family(std::string_view name);
std::string_view to_string(GraphFamily family);

struct FamilyOptions {
    std::size_t rows = 0;           // grid2d; 0 picks the most square factorization
    std::size_t cols = 0;
    double edge_probability = 0.5;  // erdos_renyi
};

inline constexpr int kErdosRenyiMaxRetries = 100;

/// Deterministic for fixed (family, n, weight, seed, options).
NetworkGraph make_graph(GraphFamily family, std::size_t n, double weight, std::uint64_t seed,
                        const FamilyOptions& options = {});

/// Edge list with header `i,j,k`, 0-based indices. n is one past the largest index.
NetworkGraph read_edge_list_csv(const std::filesystem::path& path);
void write_edge_list_csv(const std::filesystem::path& path, const NetworkGraph& graph);
/// `index,eigenvalue`
void write_spectrum_csv(const std::filesystem::path& path, const LaplacianSpectrum& spec);

} // namespace gridcoher
