#include "gridcoher/netmodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "gridcoher/error.hpp"
#include "gridcoher/io.hpp"
#include "gridcoher/random.hpp"

namespace gridcoher {

namespace {

std::vector<std::vector<std::size_t>> connected_components(std::size_t n,
                                                           const std::vector<Edge>& edges) {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& e : edges) {
        auto a = find(e.i);
        auto b = find(e.j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> slot(n, n);
    for (std::size_t v = 0; v < n; ++v) {
        auto root = find(v);
        if (slot[root] == n) {
            slot[root] = groups.size();
            groups.emplace_back();
        }
        groups[slot[root]].push_back(v);
    }
    return groups;
}

std::string describe_components(const std::vector<std::vector<std::size_t>>& groups) {
    std::ostringstream os;
    os << groups.size() << " components:";
    for (const auto& g : groups) {
        os << " {";
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (k == 8 && g.size() > 9) {
                os << ", ... (" << g.size() << " buses)";
                break;
            }
            os << (k ? "," : "") << g[k];
        }
        os << "}";
    }
    return os.str();
}

bool is_connected(std::size_t n, const std::vector<Edge>& edges) {
    return connected_components(n, edges).size() == 1;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

} // namespace

NetworkGraph::NetworkGraph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    if (n_ < 2) throw Error(ErrorKind::Graph, "network needs at least two buses");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : edges_) {
        if (e.i >= n_ || e.j >= n_) {
            throw Error(ErrorKind::Graph, "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                              ") has an index outside [0, " + std::to_string(n_) + ")");
        }
        if (e.i == e.j) throw Error(ErrorKind::Graph, "self-loop at bus " + std::to_string(e.i));
        if (!(e.k > 0.0) || !std::isfinite(e.k)) {
            throw Error(ErrorKind::Graph, "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                              ") has non-positive weight");
        }
        if (!seen.emplace(std::min(e.i, e.j), std::max(e.i, e.j)).second) {
            throw Error(ErrorKind::Graph, "duplicate edge (" + std::to_string(e.i) + "," +
                                              std::to_string(e.j) + ")");
        }
    }
    auto groups = connected_components(n_, edges_);
    if (groups.size() != 1) {
        throw Error(ErrorKind::Graph, "network is disconnected: " + describe_components(groups));
    }
}

NetworkGraph NetworkGraph::permuted(std::span<const std::size_t> perm) const {
    if (perm.size() != n_) throw Error(ErrorKind::Dimension, "permutation length differs from bus count");
    std::vector<Edge> relabeled;
    relabeled.reserve(edges_.size());
    for (const auto& e : edges_) relabeled.push_back({perm[e.i], perm[e.j], e.k});
    return NetworkGraph(n_, std::move(relabeled));
}

Eigen::MatrixXd build_laplacian(const NetworkGraph& graph) {
    const auto n = static_cast<Eigen::Index>(graph.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : graph.edges()) {
        const auto i = static_cast<Eigen::Index>(e.i);
        const auto j = static_cast<Eigen::Index>(e.j);
        L(i, j) -= e.k;
        L(j, i) -= e.k;
        L(i, i) += e.k;
        L(j, j) += e.k;
    }
    return L;
}

double LaplacianSpectrum::zero_tolerance() const {
    return 1e-10 * std::max(1.0, lambda_max());
}

Eigen::MatrixXd LaplacianSpectrum::reconstruct() const {
    return eigenbasis * eigenvalues.asDiagonal() * eigenbasis.transpose();
}

LaplacianSpectrum spectrum(const Eigen::MatrixXd& laplacian) {
    const auto n = laplacian.rows();
    if (n < 2 || laplacian.cols() != n) {
        throw Error(ErrorKind::Dimension, "Laplacian must be square with at least two rows");
    }
    const double scale = std::max(1.0, laplacian.cwiseAbs().maxCoeff());
    if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorKind::Graph, "Laplacian is not symmetric");
    }
    if (laplacian.rowwise().sum().cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw Error(ErrorKind::Graph, "Laplacian rows do not sum to zero");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::Graph, "eigensolver did not converge");

    LaplacianSpectrum spec;
    spec.eigenvalues = solver.eigenvalues();
    spec.eigenbasis = solver.eigenvectors();

    const double tol = spec.zero_tolerance();
    if (spec.eigenvalues(1) <= tol) {
        throw Error(ErrorKind::Graph, "graph effectively disconnected (lambda_2 = " +
                                          format_double(spec.eigenvalues(1)) + ")");
    }
    // The null eigenvalue is zero analytically; drop solver round-off.
    spec.eigenvalues(0) = 0.0;

    // Pin u_1 and run two passes of modified Gram-Schmidt on the rest.
    auto& U = spec.eigenbasis;
    U.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index c = 1; c < n; ++c) {
            for (Eigen::Index p = 0; p < c; ++p) U.col(c) -= U.col(p).dot(U.col(c)) * U.col(p);
            U.col(c).normalize();
        }
    }
    return spec;
}

LaplacianSpectrum spectrum(const NetworkGraph& graph) {
    return spectrum(build_laplacian(graph));
}

double effective_resistance_sum(const LaplacianSpectrum& spec) {
    double sum = 0.0;
    for (Eigen::Index i = 1; i < spec.eigenvalues.size(); ++i) sum += 1.0 / spec.eigenvalues(i);
    return sum;
}

GraphFamily parse_graph_family(std::string_view name) {
    if (name == "complete") return GraphFamily::Complete;
    if (name == "path") return GraphFamily::Path;
    if (name == "ring") return GraphFamily::Ring;
    if (name == "grid2d") return GraphFamily::Grid2d;
    if (name == "random_tree") return GraphFamily::RandomTree;
    if (name == "erdos_renyi") return GraphFamily::ErdosRenyi;
    throw Error(ErrorKind::Config, "unknown graph family '" + std::string(name) + "'");
}

std::string_view to_string(GraphFamily family) {
    switch (family) {
    case GraphFamily::Complete: return "complete";
    case GraphFamily::Path: return "path";
    case GraphFamily::Ring: return "ring";
    case GraphFamily::Grid2d: return "grid2d";
    case GraphFamily::RandomTree: return "random_tree";
    case GraphFamily::ErdosRenyi: return "erdos_renyi";
    }
    return "unknown";
}

NetworkGraph make_graph(GraphFamily family, std::size_t n, double weight, std::uint64_t seed,
                        const FamilyOptions& options) {
    if (n < 2) throw Error(ErrorKind::Graph, "graph families need n >= 2");
    if (!(weight > 0.0)) throw Error(ErrorKind::Graph, "edge weight must be positive");

    std::vector<Edge> edges;
    switch (family) {
    case GraphFamily::Complete:
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) edges.push_back({i, j, weight});
        break;
    case GraphFamily::Path:
        for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, weight});
        break;
    case GraphFamily::Ring:
        for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, weight});
        if (n > 2) edges.push_back({n - 1, 0, weight});
        break;
    case GraphFamily::Grid2d: {
        std::size_t rows = options.rows;
        std::size_t cols = options.cols;
        if (rows == 0 && cols == 0) {
            rows = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
            while (n % rows != 0) --rows;
            cols = n / rows;
        } else if (rows == 0) {
            rows = cols ? n / cols : 0;
        } else if (cols == 0) {
            cols = n / rows;
        }
        if (rows * cols != n) {
            throw Error(ErrorKind::Graph, "grid2d needs rows * cols == n (" + std::to_string(rows) + " x " +
                                              std::to_string(cols) + " != " + std::to_string(n) + ")");
        }
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const std::size_t v = r * cols + c;
                if (c + 1 < cols) edges.push_back({v, v + 1, weight});
                if (r + 1 < rows) edges.push_back({v, v + cols, weight});
            }
        }
        break;
    }
    case GraphFamily::RandomTree: {
        // Random recursive tree over a shuffled labeling.
        std::mt19937_64 rng(mix_seed(seed, 0));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t k = 1; k < n; ++k) {
            std::uniform_int_distribution<std::size_t> pick(0, k - 1);
            const auto a = order[k];
            const auto b = order[pick(rng)];
            edges.push_back({std::min(a, b), std::max(a, b), weight});
        }
        break;
    }
    case GraphFamily::ErdosRenyi: {
        const double p = options.edge_probability;
        if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::Graph, "erdos_renyi edge probability must be in (0, 1]");
        for (int attempt = 0; attempt < kErdosRenyiMaxRetries; ++attempt) {
            std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
            std::uniform_real_distribution<double> coin(0.0, 1.0);
            edges.clear();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (coin(rng) < p) edges.push_back({i, j, weight});
            if (is_connected(n, edges)) return NetworkGraph(n, std::move(edges));
        }
        throw Error(ErrorKind::Graph, "erdos_renyi: no connected sample in " +
                                          std::to_string(kErdosRenyiMaxRetries) +
                                          " retries with edge probability " + format_double(p));
    }
    }
    return NetworkGraph(n, std::move(edges));
}

NetworkGraph read_edge_list_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open edge list " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "i,j,k") {
        throw Error(ErrorKind::Io, path.string() + ": expected header 'i,j,k'");
    }
    std::vector<Edge> edges;
    std::size_t n = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
            throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(line_no) + ": expected i,j,k");
        }
        try {
            const auto i = static_cast<std::size_t>(std::stoull(trim(a)));
            const auto j = static_cast<std::size_t>(std::stoull(trim(b)));
            const double k = std::stod(trim(c));
            edges.push_back({i, j, k});
            n = std::max({n, i + 1, j + 1});
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(line_no) + ": malformed number");
        }
    }
    return NetworkGraph(n, std::move(edges));
}

void write_edge_list_csv(const std::filesystem::path& path, const NetworkGraph& graph) {
    std::ostringstream os;
    os << "i,j,k\n";
    for (const auto& e : graph.edges()) os << e.i << ',' << e.j << ',' << format_double(e.k) << '\n';
    write_text_file(path, os.str());
}

void write_spectrum_csv(const std::filesystem::path& path, const LaplacianSpectrum& spec) {
    std::ostringstream os;
    os << "index,eigenvalue\n";
    for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
        os << i << ',' << format_double(spec.eigenvalues(i)) << '\n';
    }
    write_text_file(path, os.str());
}

} // namespace gridcoher
