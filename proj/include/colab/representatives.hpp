#ifndef COLAB_REPRESENTATIVES_HPP
#define COLAB_REPRESENTATIVES_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colab/grid_fn.hpp"

namespace colab {

// ===========================================================================
// Scalar kernels
// ===========================================================================

/// g(x) = x / (1 + x²); |g| <= 1/2, attained at ±1.
double kernel_g(double x);

/// d^l/dx^l g(x), l <= 4. Orders 0..2 analytic, 3..4 by central differences.
double kernel_g_deriv(double x, int l);

/// e(x) = exp(-1/x) for x > 0, 0 for x <= 0. Underflows to 0 near x ~ 1/700.
double kernel_e(double x);

/// γ_k = k + 1/k.
double gamma_k(int k);

/// Even smooth cutoff: 1 on |x| <= 1/2, 0 on |x| >= 3/2, values in [0,1].
double sigma_cutoff(double x);

/// h_k(x) = σ(x)·2g(x) + (1-σ(x))·sgn(x)·|2g(x)|^{γ_k}; h_k(1) = 1 = sup|h_k|.
double kernel_h(int k, double x);

// ===========================================================================
// Series representatives P and Q
// ===========================================================================

struct SeriesTruncation {
    int k_max = 25;
    double tail_tol = 1e-14;
};

/// Signed scalar carried in log-magnitude form. Series terms are assembled in
/// log space so that factors such as an underflowing e(v(φ)) or overflowing
/// powers of <φ|φ> cancel before anything is materialized.
struct SeriesValue {
    double log_abs = -std::numeric_limits<double>::infinity();
    int sign = 0;
    bool tail_converged = true;

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
    bool is_zero() const { return sign == 0; }
};

/// P(φ) = Σ_{k>=1} (1/k!) g(<φ|φ>^{γ_k} e(v(φ))) <φ|φ>^{γ_k} <ξ^k, φ>.
/// Requires unit mass within 1e-8; flags a non-converged tail instead of
/// silently truncating.
SeriesValue eval_P(const TestFunction& phi, const SeriesTruncation& trunc = {});

/// Q(φ) = Σ_{k>=1} (1/k!) h_k(<φ|φ>^{3/2} <|ξ|^{1/2}, φ>) <φ|φ>^{γ_k} <ξ^k, φ>.
SeriesValue eval_Q(const TestFunction& phi, const SeriesTruncation& trunc = {});

/// Family constant for the series majorant: max_k (<φ|φ>^{γ_k}|<ξ^k,φ>|)^{1/k}.
double series_family_constant(const TestFunction& phi, int k_max = 25);

// ===========================================================================
// Smooth data for the embeddings ι and σ
// ===========================================================================

/// Closed registry of smooth data: sin, cos, polynomials up to degree 6, and
/// a Gaussian window. Carries closed-form derivatives of every order.
class SmoothDatum {
public:
    static SmoothDatum sine();
    static SmoothDatum cosine();
    static SmoothDatum polynomial(std::vector<double> coeffs);  // degree <= 6
    static SmoothDatum gauss_window();                          // exp(-x²)
    static SmoothDatum constant(double c);

    double operator()(double x) const { return deriv(0, x); }
    double deriv(int order, double x) const;
    const std::string& name() const { return name_; }

private:
    SmoothDatum(std::string name, std::function<double(int, double)> d)
        : name_(std::move(name)), deriv_(std::move(d)) {}
    std::string name_;
    std::function<double(int, double)> deriv_;
};

// ===========================================================================
// Named representatives
// ===========================================================================

enum class RepName { P, Q, R0, R1, R2, R3, R4, R5, Iota, Sigma };

struct Representative {
    RepName name = RepName::P;
    SeriesTruncation truncation{};
    std::optional<SmoothDatum> smooth_datum{};  // required for Iota / Sigma
};

Representative make_representative(const std::string& name,
                                   std::optional<SmoothDatum> datum = std::nullopt);

/// Complex value in polar log form: value = exp(log_abs) * exp(i arg).
/// abs() is well defined even when the materialized value overflows.
struct ComplexValue {
    double log_abs = -std::numeric_limits<double>::infinity();
    double arg = 0.0;
    bool tail_converged = true;

    double abs() const { return std::exp(log_abs); }
    bool finite() const;
    double re() const;
    double im() const;
    std::complex<double> value() const { return {re(), im()}; }

    static ComplexValue from_real(double x);
    static ComplexValue from_log_signed(double log_abs, int sign);
};

/// Evaluates a registry representative at (φ, x). P and Q ignore x by
/// construction, so their values are bitwise x-independent.
ComplexValue eval_named(const Representative& rep, const TestFunction& phi, double x);

// ===========================================================================
// Embedding difference and finite-difference differentials
// ===========================================================================

/// (ιf - σf)(S_εφ, x) = ∫ [f(zε+x) - f(x)] φ(z) dz.
///
/// `vanishing_order` q rewrites the bracket as the integral-form Taylor
/// remainder of order q+1, which is numerically identical for φ with
/// vanishing moments 1..q but immune to cancellation; q = 0 is the plain
/// difference (still evaluated in remainder form, hence cancellation-free).
double eval_iota_minus_sigma(const SmoothDatum& f, const TestFunction& phi, double x, double eps,
                             int vanishing_order = 0);

/// k-th directional differential d₁^k R_ε(φ, x)(ψ₁..ψ_k) by central
/// differences with one Richardson level; k <= 3. Directions must have zero
/// mass within 1e-8 (so φ stays in the unit-mass class).
double directional_differential_fd(const Representative& rep, double eps, const TestFunction& phi,
                                   double x, std::span<const TestFunction> directions);

/// Same, over an arbitrary scalar functional of the test function.
double directional_differential_fd(const std::function<double(const TestFunction&)>& functional,
                                   const TestFunction& phi,
                                   std::span<const TestFunction> directions);

}  // namespace colab

#endif
