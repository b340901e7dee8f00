#include "gridcoher/perf.hpp"

#include <cmath>
#include <string>
#include <variant>

#include "gridcoher/error.hpp"
#include "gridcoher/io.hpp"
#include "gridcoher/tuning.hpp"

namespace gridcoher {

namespace {

void require_positive_scalar(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorKind::Parameter, std::string(what) + " must be positive, got " + format_double(v));
    }
}

UniformGains gains_for(const ControllerSpec& controller, const LaplacianSpectrum& spec) {
    const auto* dapi = std::get_if<Dapi>(&controller);
    const Eigen::MatrixXd L = (dapi && dapi->comm_laplacian) ? spec.reconstruct() : Eigen::MatrixXd();
    return uniform_gains(controller, L);
}

void require_uniform(const GeneratorParams& params) {
    if (!params.is_uniform()) {
        throw Error(ErrorKind::Assumption,
                    "closed form requires uniform parameters: inertia and damping must be identical on every bus");
    }
}

bool has_integrator_per_bus(const ControllerSpec& c) {
    return std::holds_alternative<Dapi>(c) || std::holds_alternative<Depi>(c);
}

} // namespace

std::string_view to_string(NormMethod method) {
    switch (method) {
    case NormMethod::ClosedForm: return "closed_form";
    case NormMethod::Lyapunov: return "lyapunov";
    case NormMethod::MonteCarlo: return "monte_carlo";
    }
    return "unknown";
}

NormMethod parse_norm_method(std::string_view name) {
    if (name == "closed_form") return NormMethod::ClosedForm;
    if (name == "lyapunov") return NormMethod::Lyapunov;
    if (name == "monte_carlo") return NormMethod::MonteCarlo;
    throw Error(ErrorKind::Config, "unknown norm method '" + std::string(name) + "'");
}

NormReport sync_norm_closed_form(const LaplacianSpectrum& spec, double m, double d,
                                 const ControllerSpec& controller) {
    require_positive_scalar(m, "inertia m");
    require_positive_scalar(d, "damping d");
    validate(controller, spec.size());
    const UniformGains gains = gains_for(controller, spec);
    const bool integral = has_integrator_per_bus(controller);
    const double gamma = std::holds_alternative<Depi>(controller) ? 0.0 : gains.gamma;
    const double two_n = 2.0 * static_cast<double>(spec.size());

    NormReport report;
    report.method = NormMethod::ClosedForm;
    for (Eigen::Index i = 1; i < spec.eigenvalues.size(); ++i) {
        const double lambda = spec.eigenvalues(i);
        double denom = lambda * d;
        if (integral) denom += f_mode(gamma, gains.q, m, d, lambda);
        const double v = 1.0 / (two_n * denom);
        report.per_mode.push_back({static_cast<std::size_t>(i) + 1, v});
        report.value += v;
    }
    return report;
}

NormReport sync_norm_closed_form(const NetworkGraph& graph, const GeneratorParams& params,
                                 const ControllerSpec& controller) {
    params.validate(graph.size());
    require_uniform(params);
    return sync_norm_closed_form(spectrum(graph), params.m.front(), params.d.front(), controller);
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    const auto k = A.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
    const Eigen::MatrixXd At = A.transpose();
    // vec(A^T P) = (I (x) A^T) vec P,  vec(P A) = (A^T (x) I) vec P
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k * k, k * k);
    for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) {
            K.block(r * k, c * k, k, k) += I(r, c) * At;
            K.block(r * k, c * k, k, k) += At(r, c) * I;
        }
    }
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), k * k);
    const Eigen::VectorXd p = K.fullPivLu().solve(rhs);
    Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(p.data(), k, k);
    return 0.5 * (P + P.transpose());
}

std::vector<ModalSolution> modal_lyapunov(const NetworkGraph& graph, const GeneratorParams& params,
                                          const ControllerSpec& controller) {
    const std::size_t n = graph.size();
    params.validate(n);
    validate(controller, n);
    if (!params.is_uniform()) {
        throw Error(ErrorKind::Assumption,
                    "modal Lyapunov evaluation is unsupported for non-uniform parameters");
    }
    const double m = params.m.front();
    const double d = params.d.front();
    const LaplacianSpectrum spec = spectrum(graph);
    const UniformGains gains = gains_for(controller, spec);

    std::vector<ModalSolution> out;
    for (Eigen::Index i = 1; i < spec.eigenvalues.size(); ++i) {
        const std::size_t mode = static_cast<std::size_t>(i) + 1;
        const double lambda = spec.eigenvalues(i);
        const ModalBlock block = modal_block(controller, gains, lambda, m, d, n);

        // Restrict to the subspace orthogonal to the left null space of A. It is
        // A-invariant and contains B whenever the step load cannot excite a
        // conserved quantity, so the trajectory from the origin never leaves it.
        const auto k = block.A.rows();
        Eigen::FullPivLU<Eigen::MatrixXd> left(block.A.transpose());
        left.setThreshold(1e-12);
        Eigen::MatrixXd T;
        if (left.rank() == k) {
            T = Eigen::MatrixXd::Identity(k, k);
        } else {
            const Eigen::MatrixXd null_left = left.kernel();
            if ((null_left.transpose() * block.B).cwiseAbs().maxCoeff() > 1e-12) {
                throw Error(ErrorKind::Stability, "unstable mode " + std::to_string(mode) +
                                                      ": load drives a conserved quantity");
            }
            Eigen::FullPivLU<Eigen::MatrixXd> comp(null_left.transpose());
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(comp.kernel());
            T = qr.householderQ() * Eigen::MatrixXd::Identity(k, comp.kernel().cols());
        }
        const Eigen::MatrixXd Ar = T.transpose() * block.A * T;
        const Eigen::VectorXd Br = T.transpose() * block.B;
        const Eigen::RowVectorXd Cr = block.C * T;

        const Eigen::VectorXcd poles = Ar.eigenvalues();
        for (Eigen::Index p = 0; p < poles.size(); ++p) {
            if (!(poles(p).real() < 0.0)) {
                throw Error(ErrorKind::Stability, "unstable mode " + std::to_string(mode) + " (pole " +
                                                      format_double(poles(p).real()) + ")");
            }
        }

        const Eigen::VectorXd offset = -Ar.partialPivLu().solve(Br);
        const Eigen::MatrixXd P = solve_lyapunov(Ar, Cr.transpose() * Cr);

        ModalSolution sol;
        sol.mode = mode;
        sol.lambda = lambda;
        sol.equilibrium = T * offset;
        sol.gramian = P;
        sol.value = offset.dot(P * offset);
        out.push_back(std::move(sol));
    }
    return out;
}

NormReport sync_norm_lyapunov(const NetworkGraph& graph, const GeneratorParams& params,
                              const ControllerSpec& controller) {
    NormReport report;
    report.method = NormMethod::Lyapunov;
    for (const auto& sol : modal_lyapunov(graph, params, controller)) {
        report.per_mode.push_back({sol.mode, sol.value});
        report.value += sol.value;
    }
    return report;
}

double scaling_bound_dapi(double gamma, double d, double q) {
    return (gamma * d + q) / (2.0 * d);
}

} // namespace gridcoher
