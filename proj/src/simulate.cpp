#include "gridcoher/simulate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <type_traits>
#include <variant>

#include "gridcoher/error.hpp"
#include "gridcoher/io.hpp"
#include "gridcoher/parallel.hpp"
#include "gridcoher/random.hpp"

namespace gridcoher {

namespace {

constexpr double kDivergenceNorm = 1e9;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

/// One RK4 step of x' = A x + b with constant b is exactly x <- Phi x + Gamma b, where
/// Phi and Gamma are the degree-4 Taylor polynomials of exp(hA) and its integral.
struct LinearStepper {
    Eigen::MatrixXd phi;
    Eigen::MatrixXd gamma_b;  // Gamma * B_in

    LinearStepper(const ClosedLoopSystem& sys, double dt) {
        const auto k = sys.A.rows();
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
        const Eigen::MatrixXd H = dt * sys.A;
        const Eigen::MatrixXd H2 = H * H;
        const Eigen::MatrixXd H3 = H2 * H;
        phi = I + H + H2 / 2.0 + H3 / 6.0 + H3 * H / 24.0;
        gamma_b = dt * (I + H / 2.0 + H2 / 6.0 + H3 / 24.0) * sys.B_in;
    }
};

[[noreturn]] void diverged(double t) {
    throw Error(ErrorKind::Stability, "unstable closed loop: state norm exceeded 1e9 at t = " + format_double(t));
}

void check_load(const Eigen::VectorXd& p_m, std::size_t n) {
    if (p_m.size() != idx(n)) {
        throw Error(ErrorKind::Dimension, "load vector has " + std::to_string(p_m.size()) + " entries, expected " +
                                              std::to_string(n));
    }
}

double trapezoid(const std::vector<double>& y, double dt) {
    if (y.size() < 2) return 0.0;
    double sum = 0.5 * (y.front() + y.back());
    for (std::size_t k = 1; k + 1 < y.size(); ++k) sum += y[k];
    return sum * dt;
}

} // namespace

Eigen::MatrixXd TrajectoryRecord::absolute_frequency() const {
    return omega.array() + omega_ref;
}

double sync_output_energy_density(const Eigen::Ref<const Eigen::VectorXd>& omega) {
    const double mean = omega.mean();
    return (omega.array() - mean).square().sum() / static_cast<double>(omega.size());
}

std::size_t step_count(double horizon, double dt) {
    if (!(horizon > 0.0) || !(dt > 0.0) || !std::isfinite(horizon) || !std::isfinite(dt)) {
        throw Error(ErrorKind::Config, "horizon and dt must be positive");
    }
    const double steps = std::round(horizon / dt);
    if (steps < 1.0 || steps > 1e8) throw Error(ErrorKind::Config, "horizon / dt out of range");
    return static_cast<std::size_t>(steps);
}

TrajectoryRecord simulate_linear(const ClosedLoopSystem& sys, const Eigen::VectorXd& p_m, double horizon,
                                 double dt) {
    const auto& layout = sys.layout;
    check_load(p_m, layout.n);
    const std::size_t steps = step_count(horizon, dt);
    const LinearStepper stepper(sys, dt);
    const Eigen::VectorXd drive = stepper.gamma_b * p_m;
    const auto n = idx(layout.n);
    const auto w = idx(layout.omega_offset());
    const auto z = idx(layout.z_offset());
    const auto nz = idx(layout.z_size);

    TrajectoryRecord rec;
    rec.load = p_m;
    rec.times.resize(steps + 1);
    rec.y_sq.resize(steps + 1);
    rec.omega.resize(idx(steps + 1), n);
    rec.z.resize(idx(steps + 1), nz);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.A.rows());
    Eigen::VectorXd next(x.size());
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        rec.times[k] = t;
        rec.omega.row(idx(k)) = x.segment(w, n).transpose();
        if (nz > 0) rec.z.row(idx(k)) = x.segment(z, nz).transpose();
        rec.y_sq[k] = sync_output_energy_density(x.segment(w, n));
        if (k == steps) break;
        next.noalias() = stepper.phi * x;
        x = next + drive;
        if (!(x.norm() <= kDivergenceNorm)) diverged(static_cast<double>(k + 1) * dt);
    }
    rec.energy = trapezoid(rec.y_sq, dt);
    return rec;
}

double integrate_output_energy(const ClosedLoopSystem& sys, const Eigen::VectorXd& p_m, double horizon,
                               double dt) {
    const auto& layout = sys.layout;
    check_load(p_m, layout.n);
    const std::size_t steps = step_count(horizon, dt);
    const LinearStepper stepper(sys, dt);
    const Eigen::VectorXd drive = stepper.gamma_b * p_m;
    const auto n = idx(layout.n);
    const auto w = idx(layout.omega_offset());

    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.A.rows());
    Eigen::VectorXd next(x.size());
    double sum = 0.0;  // y_sq(0) == 0
    double last = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        next.noalias() = stepper.phi * x;
        x = next + drive;
        if (!(x.norm() <= kDivergenceNorm)) diverged(static_cast<double>(k) * dt);
        last = sync_output_energy_density(x.segment(w, n));
        sum += (k == steps) ? 0.5 * last : last;
    }
    return sum * dt;
}

TrajectoryRecord simulate_nonlinear(const NetworkGraph& graph, const GeneratorParams& params,
                                    const ControllerSpec& controller, const Eigen::VectorXd& p_m,
                                    const Eigen::VectorXd& delta0, double horizon, double dt) {
    const std::size_t n_buses = graph.size();
    params.validate(n_buses);
    validate(controller, n_buses);
    check_load(p_m, n_buses);
    if (delta0.size() != idx(n_buses)) throw Error(ErrorKind::Dimension, "delta0 length differs from bus count");
    const std::size_t steps = step_count(horizon, dt);

    const auto n = idx(n_buses);
    Eigen::VectorXd m(n), d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i) = params.m[static_cast<std::size_t>(i)];
        d(i) = params.d[static_cast<std::size_t>(i)];
    }

    // Integral-state dynamics mirror assemble(): z' = Zw * omega + Zz * z.
    Eigen::Index nz = 0;
    Eigen::MatrixXd Zw, Zz;
    bool scalar_broadcast = false;
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, Capi>) {
                nz = 1;
                scalar_broadcast = true;
                Zw = Eigen::MatrixXd::Constant(1, n, 1.0 / (c.q * static_cast<double>(n)));
                Zz = Eigen::MatrixXd::Zero(1, 1);
            } else if constexpr (std::is_same_v<T, Dapi> || std::is_same_v<T, Depi>) {
                nz = n;
                Eigen::VectorXd q_inv(n);
                for (Eigen::Index i = 0; i < n; ++i) q_inv(i) = 1.0 / c.q[static_cast<std::size_t>(i)];
                Zw = q_inv.asDiagonal();
                Zz = Eigen::MatrixXd::Zero(n, n);
                if constexpr (std::is_same_v<T, Dapi>) {
                    if (c.comm_laplacian) {
                        Zz = -(q_inv.asDiagonal() * *c.comm_laplacian);
                    } else if (c.gamma != 0.0) {
                        Zz = -c.gamma * (q_inv.asDiagonal() * build_laplacian(graph));
                    }
                }
            }
        },
        controller);

    const auto& edges = graph.edges();
    const Eigen::Index dim = 2 * n + nz;
    auto rhs = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd dx(dim);
        const auto theta = x.segment(0, n);
        const auto omega = x.segment(n, n);
        Eigen::VectorXd force = p_m - d.cwiseProduct(omega);
        for (const auto& e : edges) {
            const auto i = idx(e.i);
            const auto j = idx(e.j);
            const double flow = e.k * std::sin(theta(i) - theta(j));
            force(i) -= flow;
            force(j) += flow;
        }
        if (nz > 0) {
            const auto zs = x.segment(2 * n, nz);
            if (scalar_broadcast) {
                force.array() -= zs(0);
            } else {
                force -= zs;
            }
            dx.segment(2 * n, nz) = Zw * omega + Zz * zs;
        }
        dx.segment(0, n) = omega;
        dx.segment(n, n) = force.cwiseQuotient(m);
        return dx;
    };

    TrajectoryRecord rec;
    rec.load = p_m;
    rec.omega_ref = params.omega_ref;
    rec.times.resize(steps + 1);
    rec.y_sq.resize(steps + 1);
    rec.omega.resize(idx(steps + 1), n);
    rec.z.resize(idx(steps + 1), nz);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    x.segment(0, n) = delta0;
    bool sync_lost = false;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        rec.times[k] = t;
        rec.omega.row(idx(k)) = x.segment(n, n).transpose();
        if (nz > 0) rec.z.row(idx(k)) = x.segment(2 * n, nz).transpose();
        rec.y_sq[k] = sync_output_energy_density(x.segment(n, n));
        if (!sync_lost) {
            for (const auto& e : edges) {
                if (std::abs(x(idx(e.i)) - x(idx(e.j))) > std::numbers::pi / 2.0) {
                    sync_lost = true;
                    rec.warnings.push_back("loss of synchronism: |delta_" + std::to_string(e.i) + " - delta_" +
                                           std::to_string(e.j) + "| > pi/2 at t = " + format_double(t));
                    break;
                }
            }
        }
        if (k == steps) break;
        const Eigen::VectorXd k1 = rhs(x);
        const Eigen::VectorXd k2 = rhs(x + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = rhs(x + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = rhs(x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!(x.segment(n, n + nz).norm() <= kDivergenceNorm)) diverged(static_cast<double>(k + 1) * dt);
    }
    rec.energy = trapezoid(rec.y_sq, dt);
    return rec;
}

DisturbanceSample DisturbanceSample::draw(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    DisturbanceSample s;
    s.seed = seed;
    s.p_m.resize(idx(n));
    for (Eigen::Index i = 0; i < s.p_m.size(); ++i) s.p_m(i) = normal(rng);
    return s;
}

double slowest_decay_rate(const ClosedLoopSystem& sys) {
    const Eigen::VectorXcd poles = sys.A.eigenvalues();
    double slowest = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < poles.size(); ++k) {
        const double re = poles(k).real();
        if (re > 1e-9) throw Error(ErrorKind::Stability, "unstable closed loop (pole with Re = " + format_double(re) + ")");
        if (re < -1e-9) slowest = std::min(slowest, -re);
    }
    return slowest;
}

double default_horizon(const ClosedLoopSystem& sys) {
    return std::min(200.0, 40.0 / slowest_decay_rate(sys));
}

NormReport sync_norm_monte_carlo(const ClosedLoopSystem& sys, const MonteCarloOptions& options) {
    if (options.samples < 2) throw Error(ErrorKind::Config, "Monte Carlo needs at least 2 samples");
    const std::size_t steps = step_count(options.horizon, options.dt);
    require_unobservable_marginal_modes(sys);

    const std::size_t n = sys.layout.n;
    const LinearStepper stepper(sys, options.dt);
    const auto w = idx(sys.layout.omega_offset());
    const auto N = idx(n);

    std::vector<double> energy(options.samples);
    std::vector<double> terminal(options.samples);
    parallel_for(options.samples, [&](std::size_t i) {
        const std::uint64_t seed = mix_seed(options.master_seed, i);
        const Eigen::VectorXd p = options.sampler ? options.sampler(n, seed) : DisturbanceSample::draw(n, seed).p_m;
        check_load(p, n);
        const Eigen::VectorXd drive = stepper.gamma_b * p;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.A.rows());
        Eigen::VectorXd next(x.size());
        double sum = 0.0;
        double last = 0.0;
        for (std::size_t k = 1; k <= steps; ++k) {
            next.noalias() = stepper.phi * x;
            x = next + drive;
            if (!(x.norm() <= kDivergenceNorm)) diverged(static_cast<double>(k) * options.dt);
            last = sync_output_energy_density(x.segment(w, N));
            sum += (k == steps) ? 0.5 * last : last;
        }
        energy[i] = sum * options.dt;
        terminal[i] = last;
    });

    const double count = static_cast<double>(options.samples);
    double mean = 0.0;
    double terminal_mean = 0.0;
    for (std::size_t i = 0; i < options.samples; ++i) {
        mean += energy[i];
        terminal_mean += terminal[i];
    }
    mean /= count;
    terminal_mean /= count;
    double ss = 0.0;
    for (double e : energy) ss += (e - mean) * (e - mean);

    NormReport report;
    report.method = NormMethod::MonteCarlo;
    report.value = mean;
    report.std_error = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
    report.samples = options.samples;

    const double rate = slowest_decay_rate(sys);
    if (std::isfinite(rate) && terminal_mean / rate > 0.01 * mean && mean > 0.0) {
        report.warnings.push_back("horizon too short: tail energy estimate " + format_double(terminal_mean / rate) +
                                  " exceeds 1% of the mean " + format_double(mean));
    }
    return report;
}

} // namespace gridcoher
