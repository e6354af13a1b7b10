#include "colab/mollifier.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace colab {

namespace {

double bump_shape(double x, double center, double radius) {
    const double u = (x - center) / radius;
    const double w = 1.0 - u * u;
    if (w <= 0.0) return 0.0;
    return std::exp(-1.0 / w);
}

/// Basis bumps sampled on one common grid, so that linear combinations of
/// them are exact in the samples and the constraint functionals are exactly
/// linear in the coefficients. The comb is shifted off center: symmetric
/// bases yield even minimum-norm solutions, whose odd moments all vanish,
/// which would make the first free moment degenerate.
std::vector<TestFunction> common_grid_basis(const MollifierSpec& spec) {
    const double span = spec.span();
    const int b = spec.effective_basis_size();
    // radius = 3 center spacings: local enough to place mass where the
    // constraints want it, overlapping enough to stay well-conditioned
    const double radius = 6.0 * span / (b + 5);
    const double shift = 0.1 * spec.support_radius;
    const double c_max = span - radius - shift;
    std::vector<TestFunction> basis;
    basis.reserve(b);
    for (int j = 0; j < b; ++j) {
        const double center = shift - c_max + 2.0 * c_max * j / (b - 1);
        basis.push_back(TestFunction::from_callable(
            -span, span, spec.n_points,
            [=](double x) { return bump_shape(x, center, radius); }));
    }
    return basis;
}

using ConstraintFn = std::function<double(const TestFunction&)>;

/// Solves rows(φ)=rhs over the bump basis, picking the solution of minimal
/// function L²-norm (minimal cᵀGc over the basis Gram matrix G): that is the
/// Euclidean norm in sample space, and it is what keeps the constructed
/// families bounded. One round of iterative refinement pushes the discrete
/// constraint residuals to rounding level. Throws on rank deficiency or wild
/// coefficients.
TestFunction solve_constrained(const MollifierSpec& spec, const std::vector<ConstraintFn>& rows,
                               const std::vector<double>& rhs) {
    const auto basis = common_grid_basis(spec);
    const int m = static_cast<int>(rows.size());
    const int n = static_cast<int>(basis.size());
    if (n <= m) throw std::invalid_argument("basis must strictly exceed the constraint count");

    Eigen::MatrixXd a(m, n);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) a(i, j) = rows[i](basis[j]);
        b(i) = rhs[i];
    }

    Eigen::MatrixXd gram(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) gram(i, j) = gram(j, i) = inner_product(basis[i], basis[j]);
    gram.diagonal().array() += 1e-12 * gram.trace() / n;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw std::runtime_error("basis Gram matrix not positive");

    // substitute d = Lᵀc: minimize ‖d‖ subject to (A L^{-T}) d = b
    const Eigen::MatrixXd aw =
        llt.matrixL().solve(a.transpose()).transpose();  // A L^{-T}
    auto cod = aw.completeOrthogonalDecomposition();
    if (cod.rank() < m) throw std::runtime_error("constraint system rank-deficient");
    Eigen::VectorXd d = cod.solve(b);
    Eigen::VectorXd c = llt.matrixL().transpose().solve(d);
    for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd dd = cod.solve(b - a * c);
        c += llt.matrixL().transpose().solve(dd);
    }
    if (c.norm() > 1e6) throw std::runtime_error("constraint solution exceeds conditioning guard");

    std::vector<double> coeffs(c.data(), c.data() + n);
    return linear_combine(coeffs, basis);
}

std::vector<ConstraintFn> moment_rows(int q_from, int q_to) {
    std::vector<ConstraintFn> rows;
    for (int k = q_from; k <= q_to; ++k)
        rows.push_back([k](const TestFunction& f) { return moment(f, k); });
    return rows;
}

}  // namespace

TestFunction build_bump(double center, double radius, int n_points) {
    if (!(radius > 0.0)) throw std::invalid_argument("build_bump: radius must be positive");
    auto raw = TestFunction::from_callable(center - radius, center + radius, n_points,
                                           [=](double x) { return bump_shape(x, center, radius); });
    const double mass = integrate(raw);
    std::vector<double> s(raw.samples().begin(), raw.samples().end());
    for (double& v : s) v /= mass;
    return TestFunction(raw.support_lo(), raw.support_hi(), std::move(s));
}

TestFunction build_in_Aq(const MollifierSpec& spec) {
    if (spec.q < 0) throw std::invalid_argument("build_in_Aq: q must be >= 0");
    auto rows = moment_rows(0, spec.q);
    std::vector<double> rhs(spec.q + 1, 0.0);
    rhs[0] = 1.0;
    return solve_constrained(spec, rows, rhs);
}

TestFunction build_delta_moment_companion(int q, double support_radius, int n_points) {
    if (q < 1) throw std::invalid_argument("build_delta_moment_companion: q must be >= 1");
    MollifierSpec spec{q, support_radius, 0, n_points};
    auto rows = moment_rows(0, q);
    std::vector<double> rhs(q + 1, 0.0);
    rhs[q] = 1.0;
    return solve_constrained(spec, rows, rhs);
}

std::pair<TestFunction, TestFunction> build_constrained_pair(int q, double support_radius,
                                                             int n_points) {
    if (q < 1) throw std::invalid_argument("build_constrained_pair: q must be >= 1");
    // the half-moment and (q+1)-moment rows fight the low-order ones; extra
    // basis freedom keeps the minimal-norm solutions tame
    MollifierSpec spec{q, support_radius, q + 12, n_points};
    auto rows = moment_rows(0, q + 1);
    rows.push_back([](const TestFunction& f) { return half_moment(f); });
    std::vector<double> rhs(q + 3, 0.0);
    rhs[0] = 1.0;      // mass
    rhs[q + 1] = 1.0;  // moment q+1
    rhs[q + 2] = 0.0;  // half moment: φ0
    auto phi0 = solve_constrained(spec, rows, rhs);
    rhs[q + 2] = 1.0;  // half moment: φ1
    auto phi1 = solve_constrained(spec, rows, rhs);
    return {std::move(phi0), std::move(phi1)};
}

MomentReport moment_report(const TestFunction& f, int q_max) {
    if (q_max < 1) throw std::invalid_argument("moment_report: q_max must be >= 1");
    MomentReport r;
    r.mass = integrate(f);
    r.moments.resize(q_max);
    for (int k = 1; k <= q_max; ++k) r.moments[k - 1] = moment(f, k);
    r.half_moment = half_moment(f);
    r.inner = inner_product(f, f);
    return r;
}

}  // namespace colab
