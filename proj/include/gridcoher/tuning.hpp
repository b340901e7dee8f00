#pragma once

// Choosing the DAPI communication gain gamma (L_c = gamma L_k) for a fixed
// integral gain q.

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>

#include "gridcoher/netmodel.hpp"

namespace gridcoher {

/// f_i(gamma, q) = (d q + m lambda gamma) / (d q gamma + q^2 + m lambda gamma^2).
/// Each DAPI mode contributes 1 / (2n (lambda d + f_i)); larger f_i is better.
double f_mode(double gamma, double q, double m, double d, double lambda);

/// g_i = gamma + q^2 / (d q + m lambda gamma) = 1 / f_i.
double g_mode(double gamma, double q, double m, double d, double lambda);

/// Stationary point of g_i in gamma: (sqrt(m lambda) q - d q) / (m lambda).
/// Positive iff d < sqrt(m lambda).
double stationary_gamma(double q, double m, double d, double lambda);

/// Closed-form DAPI norm for uniform parameters, evaluated from the spectrum.
double dapi_norm(const LaplacianSpectrum& spec, double m, double d, double q, double gamma);

enum class DampingRegime { AllOverdamped, Mixed, AllUnderdamped };
std::string_view to_string(DampingRegime regime);

struct GammaOptimum {
    double gamma_star = 0.0;
    double lo = 0.0;  // bracket actually searched
    double hi = 0.0;
    DampingRegime regime = DampingRegime::AllOverdamped;
    double achieved_norm = 0.0;
    // Set only when a dense scan of the bracket beat the golden-section result;
    // gamma_star then holds the scan's value and this the search's.
    std::optional<double> search_gamma;
};

/// Complete graph with uniform weight b: gamma* = (sqrt(m b n) q - d q) / (m b n),
/// or 0 when d >= sqrt(m b n).
GammaOptimum optimal_gamma_complete(double m, double d, double q, double b, std::size_t n);

/// General connected graph: classify the damping regime over lambda_2..lambda_n,
/// bracket gamma* between the per-mode stationary points and minimize the closed-form
/// norm over the bracket by golden-section search.
GammaOptimum optimal_gamma_general(const LaplacianSpectrum& spec, double m, double d, double q,
                                   double tol = 1e-8);

struct ScalarMinimum {
    double x = 0.0;
    double fx = 0.0;
};

/// Golden-section search on [lo, hi] to interval width tol. The endpoints are
/// evaluated too, and the best of all candidates is returned.
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double tol);

} // namespace gridcoher
