#include "colab/diffeo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace colab {

namespace {

/// Solves x + e^x = y. f is increasing and convex; bisection brackets the
/// root, Newton polishes to ~1e-15 relative.
double exp_shift_inverse(double y) {
    auto f = [y](double x) { return x + std::exp(x) - y; };
    double hi = y > 1.0 ? std::log(y) + 1.0 : 1.0;
    while (f(hi) < 0.0) hi += 1.0;
    double lo = std::min(y - 1.0, -1.0);
    while (f(lo) > 0.0) lo -= std::max(1.0, std::abs(lo));
    for (int i = 0; i < 20; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 6; ++i) {
        const double ex = std::exp(x);
        const double step = (x + ex - y) / (1.0 + ex);
        x -= step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

}  // namespace

Diffeomorphism diffeo_identity() {
    return Diffeomorphism{"identity",
                          [](double x) { return x; },
                          [](double y) { return y; },
                          [](double) { return 1.0; },
                          [](double) { return 1.0; }};
}

Diffeomorphism diffeo_affine(double a, double b) {
    if (!(a > 0.0)) throw std::invalid_argument("diffeo_affine: need a > 0");
    return Diffeomorphism{"affine",
                          [a, b](double x) { return a * x + b; },
                          [a, b](double y) { return (y - b) / a; },
                          [a](double) { return a; },
                          [a](double) { return 1.0 / a; }};
}

Diffeomorphism diffeo_exp_shift() {
    return Diffeomorphism{"exp_shift",
                          [](double x) { return x + std::exp(x); },
                          exp_shift_inverse,
                          [](double x) { return 1.0 + std::exp(x); },
                          [](double y) { return 1.0 / (1.0 + std::exp(exp_shift_inverse(y))); }};
}

std::vector<Diffeomorphism> diffeo_registry() {
    return {diffeo_identity(), diffeo_affine(2.0, 0.5), diffeo_exp_shift()};
}

TestFunction mu_bar_eps(const TestFunction& phi_tilde, double x_tilde, double eps,
                        const Diffeomorphism& mu) {
    if (!(eps > 0.0)) throw std::invalid_argument("mu_bar_eps: eps must be positive");
    const double y0 = mu.forward(x_tilde);

    // The argument map ξ -> (μ⁻¹(εξ + y0) - x̃)/ε hits supp φ̃ exactly for
    // ξ between the images of the support endpoints.
    const double xi_lo = (mu.forward(x_tilde + eps * phi_tilde.support_lo()) - y0) / eps;
    const double xi_hi = (mu.forward(x_tilde + eps * phi_tilde.support_hi()) - y0) / eps;
    if (!(xi_lo < xi_hi) || !std::isfinite(xi_lo) || !std::isfinite(xi_hi))
        throw ChartError("scale too large for chart");

    const int n = phi_tilde.n_points();
    const double pad = 2.0 * (xi_hi - xi_lo) / (n - 1);
    const double lo = xi_lo - pad, hi = xi_hi + pad;
    if (eps * lo + y0 < mu.range_lo || eps * hi + y0 > mu.range_hi)
        throw ChartError("scale too large for chart");

    const double h = (hi - lo) / (n - 1);
    std::vector<double> s(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        const double xi = lo + i * h;
        const double w = eps * xi + y0;
        const double z = (mu.inverse(w) - x_tilde) / eps;
        const double val = phi_tilde(z);
        if (val != 0.0) s[i] = val * std::abs(mu.inverse_deriv(w));
    }
    return TestFunction(lo, hi, std::move(s));
}

ComplexValue pullback_eval(const Representative& rep, const Diffeomorphism& mu,
                           const TestFunction& phi_tilde, double x_tilde, double eps) {
    TestFunction w = mu_bar_eps(phi_tilde, x_tilde, eps, mu);
    return eval_named(rep, scale(w, eps), mu.forward(x_tilde));
}

TypeReport transformed_moment_orders(const Diffeomorphism& mu, const TestFunction& phi_tilde,
                                     const std::vector<double>& x_set, int q,
                                     const EpsGrid& grid) {
    for (int k = 1; k <= q; ++k)
        if (std::abs(moment(phi_tilde, k)) > 1e-8)
            throw std::invalid_argument("transformed_moment_orders: phi_tilde must lie in A_q");

    TypeReport rep;
    rep.q = q;
    const auto eps_points = grid.points();

    double span = 0.0;
    for (double x : x_set) span = std::max(span, std::abs(x));
    span = std::max(span, 1.0);
    const int n_global = std::max<size_t>(21, x_set.size());
    std::vector<double> global(n_global);
    for (int i = 0; i < n_global; ++i)
        global[i] = -2.0 * span + 4.0 * span * i / (n_global - 1);

    auto sweep_set = [&](const std::vector<double>& xs, int alpha) {
        std::vector<double> raw(eps_points.size(), 0.0);
        for (size_t j = 0; j < eps_points.size(); ++j)
            for (double x : xs) {
                const TestFunction w = mu_bar_eps(phi_tilde, mu.inverse(x), eps_points[j], mu);
                raw[j] = std::max(raw[j], std::abs(moment(w, alpha)));
            }
        return raw;
    };

    for (int alpha = 1; alpha <= q; ++alpha) {
        rep.local_entries.push_back(
            fit_moment_sweep(alpha, 0, sweep_set(x_set, alpha), eps_points, grid, q));
        rep.global_entries.push_back(
            fit_moment_sweep(alpha, 0, sweep_set(global, alpha), eps_points, grid, q));
    }

    auto all_pass = [](const std::vector<MomentFitEntry>& entries) {
        for (const auto& e : entries)
            if (!e.order_q) return false;
        return true;
    };
    rep.satisfies_V = std::all_of(rep.local_entries.begin(), rep.local_entries.end(),
                                  [](const MomentFitEntry& e) { return e.identically_zero; });
    rep.satisfies_A_local = all_pass(rep.local_entries);
    rep.satisfies_A_global = all_pass(rep.global_entries);
    // only β = 0 is sampled for transformed paths; the derivative variants
    // mirror the base verdicts
    rep.satisfies_A_local_inf = rep.satisfies_A_local;
    rep.satisfies_A_global_inf = rep.satisfies_A_global;
    return rep;
}

SineShiftReport sine_shift_obstruction(const TestFunction& psi,
                                       const std::vector<Diffeomorphism>& maps) {
    SineShiftReport rep;
    rep.relation1 = psi(0.0);
    rep.relation2 = psi(1.0);
    const double half_pi = std::acos(0.0);
    rep.all_contradict = !maps.empty();
    for (const auto& mu : maps) {
        SineShiftReport::PerMap pm;
        pm.name = mu.name;
        pm.jacobian_at_x1 = std::abs(mu.inverse_deriv(mu.forward(0.0)));
        pm.jacobian_at_x2 = std::abs(mu.inverse_deriv(mu.forward(half_pi)));
        // Relation 1 fixes φ̃(0) = ψ(0)/J1 ≠ 0; relation 2 demands
        // φ̃(0) = ψ(1)/J2 = 0. Both Jacobians are positive, so any nonzero
        // ψ(0) with vanishing ψ(1) is contradictory.
        pm.contradiction = std::abs(rep.relation1) > 0.0 && std::abs(rep.relation2) <= 1e-12 &&
                           pm.jacobian_at_x1 > 0.0 && pm.jacobian_at_x2 > 0.0;
        rep.all_contradict = rep.all_contradict && pm.contradiction;
        rep.maps.push_back(pm);
    }
    return rep;
}

}  // namespace colab
