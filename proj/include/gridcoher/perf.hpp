#pragma once

// Synchronization norm
//
//     E{ integral_0^inf  y(t)^T y(t) dt },   y = (1/sqrt n)(I - J_n) omega,
//
// for a step load P^m ~ N(0, I_n) applied at t = 0 to a system at rest.
// Three independent evaluators: the modal closed form, a per-mode Lyapunov
// solve, and Monte Carlo simulation (simulate.hpp).

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gridcoher/controllers.hpp"
#include "gridcoher/netmodel.hpp"

namespace gridcoher {

enum class NormMethod { ClosedForm, Lyapunov, MonteCarlo };

std::string_view to_string(NormMethod method);
NormMethod parse_norm_method(std::string_view name);

struct ModeContribution {
    std::size_t mode = 0;  // 1-based index into the ascending Laplacian spectrum, >= 2
    double value = 0.0;
};

struct NormReport {
    double value = 0.0;  // squared synchronization norm
    NormMethod method = NormMethod::ClosedForm;
    std::vector<ModeContribution> per_mode;
    std::optional<double> std_error;  // Monte Carlo only
    std::optional<std::size_t> samples;
    std::vector<std::string> warnings;
};

/// Modal closed form for uniform m, d, q and L_c = gamma L_k.
/// Droop and CAPI: sum 1/(2n lambda_i d). DAPI/DePI: sum 1/(2n (lambda_i d + f_i)).
NormReport sync_norm_closed_form(const LaplacianSpectrum& spec, double m, double d,
                                 const ControllerSpec& controller);

/// Same, after checking uniform parameters and a proportional communication graph.
NormReport sync_norm_closed_form(const NetworkGraph& graph, const GeneratorParams& params,
                                 const ControllerSpec& controller);

/// Per-mode Lyapunov data, exposed for inspection.
struct ModalSolution {
    std::size_t mode = 0;
    double lambda = 0.0;
    Eigen::VectorXd equilibrium;  // steady state reached under a unit modal load
    Eigen::MatrixXd gramian;      // observability Gramian on the mode's reachable subspace
    double value = 0.0;
};

/// Solves each decoupled mode i >= 2: equilibrium offset x_eq = -A_i^{-1} B_i, Gramian
/// A_i^T P + P A_i = -C_i^T C_i, contribution x_eq^T P x_eq. Integral controllers with
/// gamma = 0 have a conserved quantity per mode; those blocks are restricted to the
/// invariant subspace the trajectory lives on before solving.
std::vector<ModalSolution> modal_lyapunov(const NetworkGraph& graph, const GeneratorParams& params,
                                          const ControllerSpec& controller);

NormReport sync_norm_lyapunov(const NetworkGraph& graph, const GeneratorParams& params,
                              const ControllerSpec& controller);

/// Solves A^T P + P A = -Q for small dense A by the vectorized Kronecker system.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// (gamma d + q) / (2 d): bounds the DAPI norm on any connected graph of any size.
double scaling_bound_dapi(double gamma, double d, double q);

} // namespace gridcoher
