#pragma once

// Control laws and assembly of the linearized closed loop
//
//     x' = A x + B_in P^m,   y = C x,   x = (delta, omega, z).
//
// All rows are already multiplied through by M^-1 (and q^-1 or Q^-1), so A is
// the plain state matrix. Loads enter the omega block only.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gridcoher/netmodel.hpp"

namespace gridcoher {

struct GeneratorParams {
    std::vector<double> m;   // inertia per bus
    std::vector<double> d;   // damping (droop) per bus
    double omega_ref = 0.0;  // nominal frequency, only used for absolute-frequency reporting

    static GeneratorParams uniform(std::size_t n, double m, double d, double omega_ref = 0.0);

    std::size_t size() const noexcept { return m.size(); }
    /// True iff m and d are each constant across buses (max/min == 1 within 1e-12).
    bool is_uniform() const;
    /// Throws Error(Dimension) or Error(Parameter).
    void validate(std::size_t n) const;
    GeneratorParams permuted(std::span<const std::size_t> perm) const;
};

struct Droop {};

/// Centralized averaging PI: one integrator on the network-mean frequency,
/// broadcast as u_i = -z to every bus.
struct Capi {
    double q = 1.0;
};

/// Distributed averaging PI: q_i z_i' = omega_i - sum_j c_ij (z_i - z_j).
/// The communication Laplacian is either gamma * L_k or given explicitly.
struct Dapi {
    std::vector<double> q;
    double gamma = 0.0;
    std::optional<Eigen::MatrixXd> comm_laplacian;
};

/// Decentralized PI: q_i z_i' = omega_i.
struct Depi {
    std::vector<double> q;
};

using ControllerSpec = std::variant<Droop, Capi, Dapi, Depi>;

std::string_view variant_name(const ControllerSpec& spec);
ControllerSpec make_dapi(std::size_t n, double q, double gamma);
ControllerSpec make_depi(std::size_t n, double q);
void validate(const ControllerSpec& spec, std::size_t n);
ControllerSpec permuted(const ControllerSpec& spec, std::span<const std::size_t> perm);

/// Scalar gains of a controller satisfying the uniform-gain and
/// L_c = gamma L_k conditions. Droop reports q = 0. An explicit L_c is accepted
/// when it is a multiple of L_k to relative 1e-9.
struct UniformGains {
    double q = 0.0;
    double gamma = 0.0;
};
UniformGains uniform_gains(const ControllerSpec& spec, const Eigen::MatrixXd& network_laplacian);

struct StateLayout {
    std::size_t n = 0;
    std::size_t z_size = 0;  // 0 droop, 1 CAPI, n DAPI/DePI

    std::size_t delta_offset() const noexcept { return 0; }
    std::size_t omega_offset() const noexcept { return n; }
    std::size_t z_offset() const noexcept { return 2 * n; }
    std::size_t dim() const noexcept { return 2 * n + z_size; }
};

struct ClosedLoopSystem {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B_in;  // dim x n
    Eigen::MatrixXd C;     // n x dim, (1/sqrt n)(I - J_n) on the omega block
    StateLayout layout;
};

/// (1/sqrt(n)) (I_n - J_n)
Eigen::MatrixXd sync_output_map(std::size_t n);

ClosedLoopSystem assemble(const NetworkGraph& graph, const GeneratorParams& params,
                          const ControllerSpec& controller);

struct MarginalMode {
    std::complex<double> eigenvalue;
    double residual = 0.0;  // ||C v|| / ||v||

    bool observable() const noexcept { return residual > 1e-7; }
};

/// Eigenvalues with |Re| <= 1e-9 and how strongly each one shows up in y.
std::vector<MarginalMode> unobservable_marginal_modes(const ClosedLoopSystem& sys);

/// Throws Error(Stability, "observable marginal mode ...") if any marginal mode is visible in y.
void require_unobservable_marginal_modes(const ClosedLoopSystem& sys);

/// Decoupled dynamics of graph mode i >= 2 under uniform parameters:
/// 2x2 (delta, omega) for droop and CAPI, 3x3 (delta, omega, z) for DAPI/DePI.
struct ModalBlock {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
};
ModalBlock modal_block(const ControllerSpec& controller, const UniformGains& gains, double lambda,
                       double m, double d, std::size_t n);

} // namespace gridcoher
