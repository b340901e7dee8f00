#include "gridcoher/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gridcoher/error.hpp"
#include "gridcoher/io.hpp"

namespace gridcoher {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorKind::Parameter, std::string(what) + " must be positive, got " + format_double(v));
    }
}

double dapi_norm_uniform_modes(double lambda, std::size_t modes, std::size_t n, double m, double d, double q,
                               double gamma) {
    const double per_mode = 1.0 / (2.0 * static_cast<double>(n) * (lambda * d + f_mode(gamma, q, m, d, lambda)));
    return static_cast<double>(modes) * per_mode;
}

} // namespace

double f_mode(double gamma, double q, double m, double d, double lambda) {
    if (!(lambda > 0.0)) {
        throw Error(ErrorKind::Parameter, "f_mode is defined for nonzero Laplacian modes only (lambda = " +
                                              format_double(lambda) + ")");
    }
    return (d * q + m * lambda * gamma) / (d * q * gamma + q * q + m * lambda * gamma * gamma);
}

double g_mode(double gamma, double q, double m, double d, double lambda) {
    if (!(lambda > 0.0)) {
        throw Error(ErrorKind::Parameter, "g_mode is defined for nonzero Laplacian modes only");
    }
    return gamma + q * q / (d * q + m * lambda * gamma);
}

double stationary_gamma(double q, double m, double d, double lambda) {
    const double ml = m * lambda;
    return (std::sqrt(ml) * q - d * q) / ml;
}

double dapi_norm(const LaplacianSpectrum& spec, double m, double d, double q, double gamma) {
    const double two_n = 2.0 * static_cast<double>(spec.size());
    double sum = 0.0;
    for (Eigen::Index i = 1; i < spec.eigenvalues.size(); ++i) {
        const double lambda = spec.eigenvalues(i);
        sum += 1.0 / (two_n * (lambda * d + f_mode(gamma, q, m, d, lambda)));
    }
    return sum;
}

std::string_view to_string(DampingRegime regime) {
    switch (regime) {
    case DampingRegime::AllOverdamped: return "all_overdamped";
    case DampingRegime::Mixed: return "mixed";
    case DampingRegime::AllUnderdamped: return "all_underdamped";
    }
    return "unknown";
}

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
    if (hi < lo) std::swap(lo, hi);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

    ScalarMinimum best{lo, f(lo)};
    auto consider = [&best](double x, double fx) {
        if (fx < best.fx) best = {x, fx};
    };
    consider(hi, f(hi));
    if (hi - lo <= tol) return best;

    double a = lo;
    double b = hi;
    double u = b - inv_phi * (b - a);
    double v = a + inv_phi * (b - a);
    double fu = f(u);
    double fv = f(v);
    for (int iter = 0; iter < 500 && b - a > tol; ++iter) {
        if (fu <= fv) {
            b = v;
            v = u;
            fv = fu;
            u = b - inv_phi * (b - a);
            fu = f(u);
        } else {
            a = u;
            u = v;
            fu = fv;
            v = a + inv_phi * (b - a);
            fv = f(v);
        }
    }
    consider(u, fu);
    consider(v, fv);
    const double mid = 0.5 * (a + b);
    consider(mid, f(mid));
    return best;
}

GammaOptimum optimal_gamma_complete(double m, double d, double q, double b, std::size_t n) {
    require_positive(m, "inertia m");
    require_positive(d, "damping d");
    require_positive(q, "gain q");
    require_positive(b, "edge weight b");
    if (n < 2) throw Error(ErrorKind::Parameter, "complete graph needs n >= 2");

    const double lambda = b * static_cast<double>(n);
    const double mbn = m * lambda;
    GammaOptimum opt;
    if (d >= std::sqrt(mbn)) {
        opt.regime = DampingRegime::AllOverdamped;
        opt.gamma_star = 0.0;
    } else {
        opt.regime = DampingRegime::AllUnderdamped;
        opt.gamma_star = (std::sqrt(mbn) * q - d * q) / mbn;
    }
    opt.lo = opt.gamma_star;
    opt.hi = opt.gamma_star;
    opt.achieved_norm = dapi_norm_uniform_modes(lambda, n - 1, n, m, d, q, opt.gamma_star);
    return opt;
}

GammaOptimum optimal_gamma_general(const LaplacianSpectrum& spec, double m, double d, double q, double tol) {
    require_positive(m, "inertia m");
    require_positive(d, "damping d");
    require_positive(q, "gain q");
    require_positive(tol, "tolerance");

    std::size_t underdamped = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    const auto modes = static_cast<std::size_t>(spec.eigenvalues.size() - 1);
    for (Eigen::Index i = 1; i < spec.eigenvalues.size(); ++i) {
        const double lambda = spec.eigenvalues(i);
        if (d < std::sqrt(m * lambda)) {
            ++underdamped;
            const double g = stationary_gamma(q, m, d, lambda);
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
    }

    GammaOptimum opt;
    auto norm_at = [&](double gamma) { return dapi_norm(spec, m, d, q, gamma); };
    if (underdamped == 0) {
        opt.regime = DampingRegime::AllOverdamped;
        opt.achieved_norm = norm_at(0.0);
        return opt;
    }
    if (underdamped < modes) {
        // Overdamped modes have negative stationary points; they pull toward 0.
        opt.regime = DampingRegime::Mixed;
        lo = 0.0;
    } else {
        opt.regime = DampingRegime::AllUnderdamped;
    }
    opt.lo = lo;
    opt.hi = hi;

    const ScalarMinimum search = golden_section_minimize(norm_at, lo, hi, tol);
    opt.gamma_star = std::clamp(search.x, lo, hi);
    opt.achieved_norm = search.fx;

    // Unimodality on the bracket is not guaranteed for general spectra; cross-check
    // with a coarse scan and prefer it when it finds a clearly better basin.
    constexpr int kScanPoints = 1000;
    const double h = (hi - lo) / kScanPoints;
    ScalarMinimum scan{lo, norm_at(lo)};
    for (int k = 1; k <= kScanPoints && h > 0.0; ++k) {
        const double x = lo + h * k;
        const double fx = norm_at(x);
        if (fx < scan.fx) scan = {x, fx};
    }
    if (scan.fx < search.fx - 1e-12 * std::max(1.0, search.fx) && std::abs(scan.x - search.x) > h + tol) {
        const ScalarMinimum refined =
            golden_section_minimize(norm_at, std::max(lo, scan.x - h), std::min(hi, scan.x + h), tol);
        opt.search_gamma = opt.gamma_star;
        opt.gamma_star = std::clamp(refined.x, lo, hi);
        opt.achieved_norm = refined.fx;
    }
    return opt;
}

} // namespace gridcoher
