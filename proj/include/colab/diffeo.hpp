#ifndef COLAB_DIFFEO_HPP
#define COLAB_DIFFEO_HPP

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "colab/grid_fn.hpp"
#include "colab/representatives.hpp"
#include "colab/test_objects.hpp"

namespace colab {

/// Orientation-preserving smooth invertible map of an interval, with
/// closed-form forward/inverse maps and their derivatives.
struct Diffeomorphism {
    std::string name;
    std::function<double(double)> forward;
    std::function<double(double)> inverse;
    std::function<double(double)> forward_deriv;
    std::function<double(double)> inverse_deriv;
    double range_lo = -std::numeric_limits<double>::infinity();
    double range_hi = std::numeric_limits<double>::infinity();
};

Diffeomorphism diffeo_identity();
Diffeomorphism diffeo_affine(double a, double b);  // x -> a x + b, a > 0
/// x -> x + e^x; the inverse is a guarded Newton iteration to 1e-14 residual.
Diffeomorphism diffeo_exp_shift();
std::vector<Diffeomorphism> diffeo_registry();

struct ChartError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Zoomed pullback of a test function at base point x̃:
///   ξ -> φ̃((μ⁻¹(εξ + μx̃) - x̃)/ε) * |(μ⁻¹)'(εξ + μx̃)|,
/// resampled on its exact transformed support (padded two grid cells).
/// Throws ChartError when the needed arguments leave μ's range.
TestFunction mu_bar_eps(const TestFunction& phi_tilde, double x_tilde, double eps,
                        const Diffeomorphism& mu);

/// R evaluated on the transformed pair: R(S_ε pr₁ μ̄_ε(φ̃, x̃), μx̃).
ComplexValue pullback_eval(const Representative& rep, const Diffeomorphism& mu,
                           const TestFunction& phi_tilde, double x_tilde, double eps);

/// Moment-type report of the induced path (ε, x) -> pr₁ μ̄_ε(φ̃, μ⁻¹x).
TypeReport transformed_moment_orders(const Diffeomorphism& mu, const TestFunction& phi_tilde,
                                     const std::vector<double>& x_set, int q,
                                     const EpsGrid& grid);

/// Two-point non-representability probe for the path ξ -> ψ(ξ + sin x).
struct SineShiftReport {
    double relation1 = 0.0;  // ψ(0): forces a consistent φ̃(0) to be nonzero
    double relation2 = 0.0;  // ψ(1): forces φ̃(0) = 0
    struct PerMap {
        std::string name;
        double jacobian_at_x1 = 0.0;  // |(μ⁻¹)'(μ(0))|
        double jacobian_at_x2 = 0.0;  // |(μ⁻¹)'(μ(π/2))|
        bool contradiction = false;
    };
    std::vector<PerMap> maps;
    bool all_contradict = false;
};

SineShiftReport sine_shift_obstruction(const TestFunction& psi,
                                       const std::vector<Diffeomorphism>& maps);

}  // namespace colab

#endif
