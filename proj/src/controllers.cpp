#include "gridcoher/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridcoher/error.hpp"
#include "gridcoher/io.hpp"

namespace gridcoher {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool constant_within(const std::vector<double>& v, double rel) {
    if (v.empty()) return true;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo - 1.0 <= rel;
}

void require_positive(const std::vector<double>& v, std::size_t n, const char* what) {
    if (v.size() != n) {
        throw Error(ErrorKind::Dimension, std::string(what) + " has " + std::to_string(v.size()) +
                                              " entries, expected " + std::to_string(n));
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
            throw Error(ErrorKind::Parameter, std::string(what) + "[" + std::to_string(i) +
                                                  "] must be positive, got " + format_double(v[i]));
        }
    }
}

std::vector<double> permute_values(const std::vector<double>& v, std::span<const std::size_t> perm) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[perm[i]] = v[i];
    return out;
}

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

} // namespace

GeneratorParams GeneratorParams::uniform(std::size_t n, double m, double d, double omega_ref) {
    return {std::vector<double>(n, m), std::vector<double>(n, d), omega_ref};
}

bool GeneratorParams::is_uniform() const {
    return constant_within(m, 1e-12) && constant_within(d, 1e-12);
}

void GeneratorParams::validate(std::size_t n) const {
    require_positive(m, n, "inertia m");
    require_positive(d, n, "damping d");
}

GeneratorParams GeneratorParams::permuted(std::span<const std::size_t> perm) const {
    return {permute_values(m, perm), permute_values(d, perm), omega_ref};
}

std::string_view variant_name(const ControllerSpec& spec) {
    return std::visit(overloaded{
                          [](const Droop&) { return std::string_view("droop"); },
                          [](const Capi&) { return std::string_view("capi"); },
                          [](const Dapi&) { return std::string_view("dapi"); },
                          [](const Depi&) { return std::string_view("depi"); },
                      },
                      spec);
}

ControllerSpec make_dapi(std::size_t n, double q, double gamma) {
    return Dapi{std::vector<double>(n, q), gamma, std::nullopt};
}

ControllerSpec make_depi(std::size_t n, double q) {
    return Depi{std::vector<double>(n, q)};
}

void validate(const ControllerSpec& spec, std::size_t n) {
    std::visit(overloaded{
                   [](const Droop&) {},
                   [](const Capi& c) {
                       if (!(c.q > 0.0) || !std::isfinite(c.q)) {
                           throw Error(ErrorKind::Parameter, "CAPI gain q must be positive");
                       }
                   },
                   [n](const Dapi& c) {
                       require_positive(c.q, n, "DAPI gain q");
                       if (c.comm_laplacian) {
                           const auto& L = *c.comm_laplacian;
                           if (L.rows() != idx(n) || L.cols() != idx(n)) {
                               throw Error(ErrorKind::Dimension, "communication Laplacian must be " +
                                                                     std::to_string(n) + "x" + std::to_string(n));
                           }
                           // Symmetry, zero row sums and connectivity.
                           (void)spectrum(L);
                       } else if (!(c.gamma >= 0.0) || !std::isfinite(c.gamma)) {
                           throw Error(ErrorKind::Parameter, "DAPI gamma must be finite and >= 0");
                       }
                   },
                   [n](const Depi& c) { require_positive(c.q, n, "DePI gain q"); },
               },
               spec);
}

ControllerSpec permuted(const ControllerSpec& spec, std::span<const std::size_t> perm) {
    return std::visit(overloaded{
                          [](const Droop& c) -> ControllerSpec { return c; },
                          [](const Capi& c) -> ControllerSpec { return c; },
                          [perm](const Dapi& c) -> ControllerSpec {
                              Dapi out{permute_values(c.q, perm), c.gamma, std::nullopt};
                              if (c.comm_laplacian) {
                                  const auto& L = *c.comm_laplacian;
                                  Eigen::MatrixXd P(L.rows(), L.cols());
                                  for (Eigen::Index i = 0; i < L.rows(); ++i)
                                      for (Eigen::Index j = 0; j < L.cols(); ++j)
                                          P(idx(perm[i]), idx(perm[j])) = L(i, j);
                                  out.comm_laplacian = std::move(P);
                              }
                              return out;
                          },
                          [perm](const Depi& c) -> ControllerSpec { return Depi{permute_values(c.q, perm)}; },
                      },
                      spec);
}

UniformGains uniform_gains(const ControllerSpec& spec, const Eigen::MatrixXd& network_laplacian) {
    auto uniform_q = [](const std::vector<double>& q) {
        if (q.empty() || !constant_within(q, 1e-12)) {
            throw Error(ErrorKind::Assumption, "closed form requires uniform parameters: gains q differ across buses");
        }
        return q.front();
    };
    return std::visit(
        overloaded{
            [](const Droop&) { return UniformGains{}; },
            [](const Capi& c) { return UniformGains{c.q, 0.0}; },
            [&](const Dapi& c) {
                UniformGains g{uniform_q(c.q), c.gamma};
                if (c.comm_laplacian) {
                    const auto& Lc = *c.comm_laplacian;
                    const double denom = network_laplacian.squaredNorm();
                    g.gamma = Lc.cwiseProduct(network_laplacian).sum() / denom;
                    const double residual = (Lc - g.gamma * network_laplacian).cwiseAbs().maxCoeff();
                    if (residual > 1e-9 * std::max(1.0, Lc.cwiseAbs().maxCoeff())) {
                        throw Error(ErrorKind::Assumption,
                                    "closed form requires a communication Laplacian proportional to the "
                                    "network Laplacian (L_c = gamma L_k)");
                    }
                }
                return g;
            },
            [&](const Depi& c) { return UniformGains{uniform_q(c.q), 0.0}; },
        },
        spec);
}

Eigen::MatrixXd sync_output_map(std::size_t n) {
    const double nd = static_cast<double>(n);
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(idx(n), idx(n));
    C.array() -= 1.0 / nd;
    return C / std::sqrt(nd);
}

ClosedLoopSystem assemble(const NetworkGraph& graph, const GeneratorParams& params,
                          const ControllerSpec& controller) {
    const std::size_t n = graph.size();
    params.validate(n);
    validate(controller, n);

    const std::size_t z_size = std::visit(overloaded{
                                              [](const Droop&) -> std::size_t { return 0; },
                                              [](const Capi&) -> std::size_t { return 1; },
                                              [n](const Dapi&) { return n; },
                                              [n](const Depi&) { return n; },
                                          },
                                          controller);
    ClosedLoopSystem sys;
    sys.layout = {n, z_size};
    const auto dim = idx(sys.layout.dim());
    const auto N = idx(n);
    const auto w = idx(sys.layout.omega_offset());
    const auto z = idx(sys.layout.z_offset());

    Eigen::VectorXd m_inv(N);
    Eigen::VectorXd d(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        m_inv(i) = 1.0 / params.m[static_cast<std::size_t>(i)];
        d(i) = params.d[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd L = build_laplacian(graph);

    sys.A = Eigen::MatrixXd::Zero(dim, dim);
    sys.A.block(0, w, N, N).setIdentity();
    sys.A.block(w, 0, N, N) = -(m_inv.asDiagonal() * L);
    sys.A.block(w, w, N, N).diagonal() = -m_inv.cwiseProduct(d);

    std::visit(overloaded{
                   [](const Droop&) {},
                   [&](const Capi& c) {
                       sys.A.block(w, z, N, 1) = -m_inv;
                       sys.A.block(z, w, 1, N).setConstant(1.0 / (c.q * static_cast<double>(n)));
                   },
                   [&](const Dapi& c) {
                       Eigen::VectorXd q_inv(N);
                       for (Eigen::Index i = 0; i < N; ++i) q_inv(i) = 1.0 / c.q[static_cast<std::size_t>(i)];
                       sys.A.block(w, z, N, N).diagonal() = -m_inv;
                       sys.A.block(z, w, N, N).diagonal() = q_inv;
                       if (c.comm_laplacian) {
                           sys.A.block(z, z, N, N) = -(q_inv.asDiagonal() * *c.comm_laplacian);
                       } else if (c.gamma != 0.0) {
                           sys.A.block(z, z, N, N) = -c.gamma * (q_inv.asDiagonal() * L);
                       }
                   },
                   [&](const Depi& c) {
                       sys.A.block(w, z, N, N).diagonal() = -m_inv;
                       for (Eigen::Index i = 0; i < N; ++i) sys.A(z + i, w + i) = 1.0 / c.q[static_cast<std::size_t>(i)];
                   },
               },
               controller);

    sys.B_in = Eigen::MatrixXd::Zero(dim, N);
    sys.B_in.block(w, 0, N, N).diagonal() = m_inv;

    sys.C = Eigen::MatrixXd::Zero(N, dim);
    sys.C.block(0, w, N, N) = sync_output_map(n);
    return sys;
}

std::vector<MarginalMode> unobservable_marginal_modes(const ClosedLoopSystem& sys) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(sys.A, true);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::Stability, "eigensolver did not converge");
    const Eigen::VectorXcd values = solver.eigenvalues();
    const Eigen::MatrixXcd vectors = solver.eigenvectors();
    const Eigen::MatrixXcd C = sys.C.cast<std::complex<double>>();

    std::vector<MarginalMode> out;
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        if (std::abs(values(k).real()) > 1e-9) continue;
        const Eigen::VectorXcd v = vectors.col(k);
        out.push_back({values(k), (C * v).norm() / v.norm()});
    }
    return out;
}

void require_unobservable_marginal_modes(const ClosedLoopSystem& sys) {
    for (const auto& mode : unobservable_marginal_modes(sys)) {
        if (mode.observable()) {
            throw Error(ErrorKind::Stability, "observable marginal mode at eigenvalue " +
                                                  format_double(mode.eigenvalue.real()) + "+" +
                                                  format_double(mode.eigenvalue.imag()) + "i (residual " +
                                                  format_double(mode.residual) + ")");
        }
    }
}

ModalBlock modal_block(const ControllerSpec& controller, const UniformGains& gains, double lambda, double m,
                       double d, std::size_t n) {
    const double c = 1.0 / std::sqrt(static_cast<double>(n));
    const bool integral = std::holds_alternative<Dapi>(controller) || std::holds_alternative<Depi>(controller);
    ModalBlock block;
    if (!integral) {
        // The CAPI integrator only couples to mode 1, so modes i >= 2 match droop.
        block.A.resize(2, 2);
        block.A << 0.0, 1.0,
                   -lambda / m, -d / m;
        block.B = Eigen::Vector2d(0.0, 1.0 / m);
        block.C = Eigen::RowVector2d(0.0, c);
        return block;
    }
    const double q = gains.q;
    const double gamma = std::holds_alternative<Depi>(controller) ? 0.0 : gains.gamma;
    block.A.resize(3, 3);
    block.A << 0.0, 1.0, 0.0,
               -lambda / m, -d / m, -1.0 / m,
               0.0, 1.0 / q, -gamma * lambda / q;
    block.B = Eigen::Vector3d(0.0, 1.0 / m, 0.0);
    block.C = Eigen::RowVector3d(0.0, c, 0.0);
    return block;
}

} // namespace gridcoher
