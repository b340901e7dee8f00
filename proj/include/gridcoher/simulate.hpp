#pragma once

// Time-domain simulation with fixed-step classical Runge-Kutta, and the Monte
// Carlo estimator of the synchronization norm built on it.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcoher/controllers.hpp"
#include "gridcoher/netmodel.hpp"
#include "gridcoher/perf.hpp"

namespace gridcoher {

struct TrajectoryRecord {
    std::vector<double> times;  // times[0] == 0
    Eigen::MatrixXd omega;      // one row per time sample, frequency deviations
    Eigen::MatrixXd z;          // integral states, zero columns for droop
    std::vector<double> y_sq;   // y^T y = (1/n) sum_i (omega_i - mean omega)^2
    Eigen::VectorXd load;
    double omega_ref = 0.0;
    double energy = 0.0;        // trapezoidal integral of y_sq
    std::vector<std::string> warnings;

    /// omega + omega_ref, row per time sample.
    Eigen::MatrixXd absolute_frequency() const;
};

/// ||(1/sqrt n)(I - J_n) omega||^2
double sync_output_energy_density(const Eigen::Ref<const Eigen::VectorXd>& omega);

/// Number of dt steps covering [0, horizon]; throws Error(Config) on bad inputs.
std::size_t step_count(double horizon, double dt);

/// Linear closed loop from the origin under a constant load p_m.
TrajectoryRecord simulate_linear(const ClosedLoopSystem& sys, const Eigen::VectorXd& p_m, double horizon,
                                 double dt);

/// Integral of y^T y only, without storing the trajectory.
double integrate_output_energy(const ClosedLoopSystem& sys, const Eigen::VectorXd& p_m, double horizon,
                               double dt);

/// Nonlinear swing dynamics  m_i delta_i'' + d_i (delta_i' - omega_ref) = -sum k_ij sin(delta_i - delta_j)
/// + P_i + u_i, with the same controllers acting on omega = delta' - omega_ref.
/// Integrated in the frame rotating at omega_ref, starting from delta0 with omega = z = 0.
TrajectoryRecord simulate_nonlinear(const NetworkGraph& graph, const GeneratorParams& params,
                                    const ControllerSpec& controller, const Eigen::VectorXd& p_m,
                                    const Eigen::VectorXd& delta0, double horizon, double dt);

struct DisturbanceSample {
    Eigen::VectorXd p_m;
    std::uint64_t seed = 0;

    /// i.i.d. standard normal, reproducible from seed.
    static DisturbanceSample draw(std::size_t n, std::uint64_t seed);
};

using LoadSampler = std::function<Eigen::VectorXd(std::size_t n, std::uint64_t seed)>;

struct MonteCarloOptions {
    std::size_t samples = 4000;
    double horizon = 40.0;
    double dt = 0.01;
    std::uint64_t master_seed = 1;
    LoadSampler sampler;  // empty: DisturbanceSample::draw
};

/// Slowest nonzero decay rate min |Re lambda| over eigenvalues of A with Re < -1e-9.
double slowest_decay_rate(const ClosedLoopSystem& sys);

/// 40 / (slowest decay rate), capped at 200 s.
double default_horizon(const ClosedLoopSystem& sys);

/// Sample mean of the output energy over loads drawn with seed_i = mix_seed(master_seed, i).
/// Samples run in parallel; the sum is taken in index order afterwards.
NormReport sync_norm_monte_carlo(const ClosedLoopSystem& sys, const MonteCarloOptions& options);

} // namespace gridcoher
