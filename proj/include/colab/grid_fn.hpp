#ifndef COLAB_GRID_FN_HPP
#define COLAB_GRID_FN_HPP

#include <functional>
#include <span>
#include <vector>

namespace colab {

/// Compactly supported smooth function on the real line, held as samples on a
/// uniform grid over its support. Boundary samples are zero; evaluation
/// outside the support is exactly zero. Immutable after construction.
class TestFunction {
public:
    TestFunction(double support_lo, double support_hi, std::vector<double> samples);

    static TestFunction zero(double support_lo, double support_hi, int n_points);

    /// Samples `f` on the grid; endpoint samples are forced to exact zero.
    static TestFunction from_callable(double support_lo, double support_hi, int n_points,
                                      const std::function<double(double)>& f);

    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }
    int n_points() const { return static_cast<int>(samples_.size()); }
    double dx() const { return (hi_ - lo_) / (n_points() - 1); }
    double grid_point(int i) const { return lo_ + i * dx(); }
    std::span<const double> samples() const { return samples_; }

    bool is_zero() const;
    double sup_norm() const;

    /// Local cubic (4-point Lagrange) interpolation; exact 0 outside support.
    double operator()(double x) const;

    /// Same samples on a translated support.
    TestFunction translated(double shift) const;

private:
    double lo_, hi_;
    std::vector<double> samples_;
};

// Quadrature functionals. All are trapezoid-rule sums over the sample grid
// with compensated summation, hence linear in the samples and deterministic.

double integrate(const TestFunction& f);

/// ∫ ξ^k f(ξ) dξ. Documented accuracy range k <= 12; higher k is allowed and
/// used internally by series evaluators (the factorial weights there forgive
/// the slow loss of relative accuracy).
double moment(const TestFunction& f, int k);

/// ∫ |ξ|^{1/2} f(ξ) dξ. The kink at 0 is removed by splitting there and
/// substituting ξ = ±u², so the trapezoid rule sees smooth integrands.
double half_moment(const TestFunction& f);

double inner_product(const TestFunction& f, const TestFunction& h);

/// <f|f>^{1/2} * half_moment(f). Throws std::domain_error on the zero function.
double v_functional(const TestFunction& f);

/// S_eps: f -> (1/eps) f(./eps). Pure coordinate rescale of the grid, so the
/// scaling identities of the moment functionals hold to rounding error.
/// Throws std::invalid_argument for eps <= 0.
TestFunction scale(const TestFunction& f, double eps);

TestFunction linear_combine(std::span<const double> coeffs, std::span<const TestFunction> fns);

inline TestFunction linear_combine(std::initializer_list<double> coeffs,
                                   std::initializer_list<TestFunction> fns) {
    return linear_combine(std::span<const double>(coeffs.begin(), coeffs.size()),
                          std::span<const TestFunction>(fns.begin(), fns.size()));
}

}  // namespace colab

#endif
