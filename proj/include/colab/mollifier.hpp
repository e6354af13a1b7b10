#ifndef COLAB_MOLLIFIER_HPP
#define COLAB_MOLLIFIER_HPP

#include <utility>
#include <vector>

#include "colab/grid_fn.hpp"

namespace colab {

/// Recipe for a moment-constrained mollifier. The basis is a row of equally
/// spaced bumps of equal radius spanning [-2*support_radius, 2*support_radius];
/// constraints are solved by a minimum-norm least-squares fit.
struct MollifierSpec {
    int q = 0;                    // vanishing-moment order
    double support_radius = 1.0;  // basis spans [-2r, 2r]
    int basis_size = 0;           // 0 -> q + 6
    int n_points = 2048;

    int effective_basis_size() const { return basis_size > 0 ? basis_size : q + 6; }
    double span() const { return 2.0 * support_radius; }
};

struct MomentReport {
    double mass = 0.0;
    std::vector<double> moments;  // moments[k-1] = <ξ^k, f>, k = 1..q_max
    double half_moment = 0.0;
    double inner = 0.0;
};

/// Unit-mass bump c*exp(-1/(1-((x-center)/radius)^2)) on |x-center| < radius.
TestFunction build_bump(double center, double radius, int n_points = 2048);

/// φ with mass 1 and moments 1..q vanishing (all at the discrete quadrature
/// level, to well below the advertised tolerances).
TestFunction build_in_Aq(const MollifierSpec& spec);

/// ψ with mass 0, moments 1..q-1 vanishing and moment q equal to 1.
TestFunction build_delta_moment_companion(int q, double support_radius = 1.0,
                                          int n_points = 2048);

/// (φ0, φ1), both unit mass with moments 1..q vanishing, and
///   half_moment(φ0) = 0,  moment(φ0, q+1) = 1,
///   half_moment(φ1) = 1,  moment(φ1, q+1) = 1.
std::pair<TestFunction, TestFunction> build_constrained_pair(int q, double support_radius = 1.0,
                                                             int n_points = 2048);

MomentReport moment_report(const TestFunction& f, int q_max);

}  // namespace colab

#endif
