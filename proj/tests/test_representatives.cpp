#include <doctest.h>

#include <cmath>

#include "colab/mollifier.hpp"
#include "colab/representatives.hpp"
#include "colab/test_objects.hpp"
#include "oracles.hpp"

using namespace colab;

TEST_CASE("kernel g: values and derivative orders") {
    CHECK(kernel_g(1.0) == 0.5);
    CHECK(kernel_g(0.0) == 0.0);
    CHECK(kernel_g(2.0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(kernel_g_deriv(0.0, 1) == 1.0);
    CHECK(kernel_g_deriv(1.0, 1) == 0.0);
    // finite-difference orders track an independent difference of g''
    const double h = 1e-5;
    const double fd3 = (kernel_g_deriv(0.4 + h, 2) - kernel_g_deriv(0.4 - h, 2)) / (2 * h);
    CHECK(kernel_g_deriv(0.4, 3) == doctest::Approx(fd3).epsilon(1e-6));
    CHECK_THROWS_AS((void)kernel_g_deriv(0.0, 5), std::invalid_argument);
}

TEST_CASE("kernel e: branch behavior") {
    CHECK(kernel_e(-1.0) == 0.0);
    CHECK(kernel_e(0.0) == 0.0);
    CHECK(kernel_e(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(kernel_e(1e-4) == 0.0);  // documented underflow region
}

TEST_CASE("gamma_k values") {
    CHECK(gamma_k(1) == 2.0);
    CHECK(gamma_k(2) == 2.5);
    CHECK(gamma_k(10) == doctest::Approx(10.1).epsilon(1e-15));
    CHECK_THROWS_AS((void)gamma_k(0), std::invalid_argument);
}

TEST_CASE("sigma cutoff: plateau, support, symmetry") {
    CHECK(sigma_cutoff(0.0) == 1.0);
    CHECK(sigma_cutoff(0.5) == 1.0);
    CHECK(sigma_cutoff(1.5) == 0.0);
    CHECK(sigma_cutoff(3.0) == 0.0);
    CHECK(sigma_cutoff(1.0) == 0.5);
    CHECK(sigma_cutoff(-0.9) == sigma_cutoff(0.9));
    CHECK(sigma_cutoff(0.8) > 0.0);
    CHECK(sigma_cutoff(0.8) < 1.0);
}

TEST_CASE("kernel h: exact peak, origin, plateau identity") {
    for (int k = 1; k <= 10; ++k) CHECK(kernel_h(k, 1.0) == 1.0);
    for (int k : {1, 3, 7}) CHECK(kernel_h(k, 0.0) == 0.0);
    for (double x : {-0.5, -0.25, 0.1, 0.49, 0.5})
        CHECK(kernel_h(3, x) == 2.0 * kernel_g(x));
    // sup |h_k| = 1: sample broadly
    for (int k : {1, 2, 5}) {
        double sup = 0.0;
        for (double x = -20.0; x <= 20.0; x += 1e-3)
            sup = std::max(sup, std::abs(kernel_h(k, x)));
        CHECK(sup <= 1.0 + 1e-12);
    }
}

TEST_CASE("P vanishes when the half moment is not positive") {
    // mirror a bump to make the half moment vanish, mass stays 1 via the
    // positive part sitting at the origin
    const TestFunction phi0 = build_constrained_pair(2).first;  // half moment 0
    const SeriesValue v = eval_P(phi0);
    CHECK(v.is_zero());
    CHECK(v.tail_converged);
}

TEST_CASE("P matches the brute-force oracle at the witness point") {
    const int q = 2;
    const auto pair = build_constrained_pair(q);
    const WitnessPoint w = lambda_witness(pair, q, 0.2, WitnessVariant::P);
    SeriesTruncation trunc;
    trunc.k_max = 40;
    const SeriesValue mine = eval_P(scale(w.phi_lambda, w.eps_lambda), trunc);
    const double reference = oracle::brute_force_P(w.phi_lambda, w.eps_lambda);
    CHECK(mine.tail_converged);
    CHECK(mine.value() == doctest::Approx(reference).epsilon(1e-7));
}

TEST_CASE("P term magnitudes respect the family majorant") {
    const auto pair = build_constrained_pair(2);
    const TestFunction phi = linear_combine({0.5, 0.5}, {pair.first, pair.second});
    const double c_family = series_family_constant(phi);
    for (double eps : {0.5, 0.1, 0.01}) {
        const TestFunction s = scale(phi, eps);
        const double c_scaled = series_family_constant(s);
        // scaling multiplies the k-th building block by eps^{-1/k}; the
        // family constant moves by at most eps^{-1}
        CHECK(c_scaled <= c_family / eps + 1e-9);
    }
}

TEST_CASE("P of a scaled order-q probe decays at order q+1") {
    const int n = 3;  // q = n - 1 = 2
    const TestFunction phi = build_in_Aq(MollifierSpec{n - 1});
    if (half_moment(phi) > 0.0) {
        std::vector<double> eps, val;
        for (double e = 1e-2; e >= 1e-4; e /= 2.0) {
            eps.push_back(e);
            val.push_back(std::exp(eval_P(scale(phi, e)).log_abs));
        }
        CHECK(oracle::ls_slope(eps, val) >= n - 0.1);
    }
}

TEST_CASE("P under scaling obeys the e^C / e(v) envelope") {
    // |P(S_eps phi)| <= eps^{q+1} e^C / e(v(phi)) with C the family constant
    const int q = 2;
    const TestFunction phi = build_in_Aq(MollifierSpec{q});
    const double hm = half_moment(phi);
    if (hm > 0.0) {
        const double v = std::sqrt(inner_product(phi, phi)) * hm;
        const double c = series_family_constant(phi);
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const double bound = std::log(std::pow(eps, q + 1)) + c + 1.0 / v;
            CHECK(eval_P(scale(phi, eps)).log_abs <= bound);
        }
    }
}

TEST_CASE("Q is trivial when the half moment vanishes") {
    const TestFunction phi0 = build_constrained_pair(2).first;
    CHECK(eval_Q(phi0).is_zero());
}

TEST_CASE("Q matches the brute-force oracle") {
    const int q = 1;
    const auto pair = build_constrained_pair(q);
    const WitnessPoint w = lambda_witness(pair, q, 0.25, WitnessVariant::Q);
    SeriesTruncation trunc;
    trunc.k_max = 40;
    const SeriesValue mine = eval_Q(scale(w.phi_lambda, w.eps_lambda), trunc);
    const double reference = oracle::brute_force_Q(w.phi_lambda, w.eps_lambda);
    CHECK(mine.value() == doctest::Approx(reference).epsilon(1e-7));
}

TEST_CASE("Q h-factors obey the scaled bound") {
    const TestFunction phi = build_in_Aq(MollifierSpec{1});
    const double ip = inner_product(phi, phi);
    const double hm = half_moment(phi);
    if (hm != 0.0) {
        const double y = std::pow(ip, 1.5) * std::abs(hm);
        for (double eps : {0.1, 0.01}) {
            if (eps > (2.0 / 3.0) * y) continue;
            for (int k = 1; k <= 6; ++k) {
                const double h = std::abs(kernel_h(k, y / eps));
                const double bound = std::pow(eps * 2.0 / y, gamma_k(k));
                CHECK(h <= bound * (1.0 + 1e-12));
            }
        }
    }
}

TEST_CASE("P and Q ignore the base point bitwise") {
    const TestFunction phi = build_constrained_pair(2).second;
    const Representative p = make_representative("P");
    const Representative q = make_representative("Q");
    const ComplexValue p0 = eval_named(p, phi, 0.0);
    const ComplexValue p7 = eval_named(p, phi, 7.0);
    CHECK(p0.log_abs == p7.log_abs);
    CHECK(p0.arg == p7.arg);
    const ComplexValue q0 = eval_named(q, phi, 0.0);
    const ComplexValue q7 = eval_named(q, phi, 7.0);
    CHECK(q0.log_abs == q7.log_abs);
    CHECK(q0.arg == q7.arg);
}

TEST_CASE("P requires a unit-mass argument") {
    const TestFunction psi = build_delta_moment_companion(1);  // zero mass
    CHECK_THROWS_AS((void)eval_P(psi), std::invalid_argument);
}

TEST_CASE("named representatives: R0, R1, R5") {
    const TestFunction bump = build_bump(0.0, 1.0);
    const TestFunction a1 = build_in_Aq(MollifierSpec{1});
    const Representative r0 = make_representative("R0");
    const Representative r1 = make_representative("R1");
    const Representative r5 = make_representative("R5");

    for (double eps : {1.0, 0.05})
        CHECK(eval_named(r0, scale(bump, eps), 3.0).abs() == 1.0);

    CHECK(eval_named(r1, a1, 0.0).abs() <= 1e-12);

    const double ip = inner_product(bump, bump);
    for (double eps : {1e-2, 1e-4}) {
        const ComplexValue v = eval_named(r5, scale(bump, eps), 0.0);
        CHECK(eps * v.log_abs == doctest::Approx(-ip).epsilon(1e-10));
    }
    CHECK_THROWS_AS((void)make_representative("R9"), std::invalid_argument);
    CHECK_THROWS_AS((void)make_representative("iota"), std::invalid_argument);
}

TEST_CASE("iota minus sigma: constants, linear data, sine order") {
    const TestFunction phi1 = build_in_Aq(MollifierSpec{1});
    const SmoothDatum c = SmoothDatum::constant(2.0);
    CHECK(eval_iota_minus_sigma(c, phi1, 0.3, 0.1) == 0.0);

    const SmoothDatum lin = SmoothDatum::polynomial({0.0, 1.0});
    for (double eps : {0.5, 1e-2, 1e-4})
        CHECK(std::abs(eval_iota_minus_sigma(lin, phi1, 0.0, eps, 1)) <= 1e-13);

    const SmoothDatum sine = SmoothDatum::sine();
    const TestFunction phi3 = build_in_Aq(MollifierSpec{3});
    std::vector<double> eps, val;
    for (double e = 1e-1; e >= 1e-4; e /= 2.0) {
        eps.push_back(e);
        val.push_back(eval_iota_minus_sigma(sine, phi3, 0.3, e, 3));
    }
    CHECK(oracle::ls_slope(eps, val) >= 3.9);
}

TEST_CASE("iota minus sigma remainder form equals the plain difference") {
    // for data with enough smoothness both evaluations agree when the
    // moments genuinely vanish
    const SmoothDatum sine = SmoothDatum::sine();
    const TestFunction phi2 = build_in_Aq(MollifierSpec{2});
    for (double eps : {0.3, 0.05}) {
        const double plain = eval_iota_minus_sigma(sine, phi2, 0.7, eps, 0);
        const double compensated = eval_iota_minus_sigma(sine, phi2, 0.7, eps, 2);
        CHECK(plain == doctest::Approx(compensated).epsilon(1e-9));
    }
}

TEST_CASE("smooth datum derivatives are closed-form") {
    const SmoothDatum g = SmoothDatum::gauss_window();
    const double x = 0.4;
    const double h = 1e-5;
    const double fd = (g(x + h) - g(x - h)) / (2 * h);
    CHECK(g.deriv(1, x) == doctest::Approx(fd).epsilon(1e-8));
    const SmoothDatum p = SmoothDatum::polynomial({1.0, 0.0, -2.0, 0.0, 0.5});
    CHECK(p(2.0) == doctest::Approx(1.0 - 8.0 + 8.0).epsilon(1e-14));
    CHECK(p.deriv(1, 2.0) == doctest::Approx(-4.0 * 2.0 + 2.0 * 8.0).epsilon(1e-14));
    CHECK(p.deriv(7, 1.0) == 0.0);
    CHECK_THROWS_AS((void)SmoothDatum::polynomial(std::vector<double>(8, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("directional differentials: order 0, linear and quadratic functionals") {
    const TestFunction phi = build_in_Aq(MollifierSpec{2});
    const TestFunction psi = build_delta_moment_companion(2);
    const TestFunction psi2 = build_delta_moment_companion(1);

    auto lin = [](const TestFunction& f) { return moment(f, 1); };
    auto quad = [](const TestFunction& f) { return inner_product(f, f); };

    CHECK(directional_differential_fd(lin, phi, {}) == lin(phi));

    const TestFunction dirs1[] = {psi};
    CHECK(directional_differential_fd(lin, phi, dirs1) ==
          doctest::Approx(moment(psi, 1)).epsilon(1e-6));
    CHECK(directional_differential_fd(quad, phi, dirs1) ==
          doctest::Approx(2.0 * inner_product(phi, psi)).epsilon(1e-6));

    // second differential of <φ|φ> is 2<ψ1|ψ2>, symmetric in the directions
    const TestFunction dirs2[] = {psi, psi2};
    const TestFunction dirs2r[] = {psi2, psi};
    const double d2 = directional_differential_fd(quad, phi, dirs2);
    CHECK(d2 == doctest::Approx(2.0 * inner_product(psi, psi2)).epsilon(1e-4));
    CHECK(d2 == doctest::Approx(directional_differential_fd(quad, phi, dirs2r)).epsilon(1e-6));

    // nonzero-mass directions are rejected
    const TestFunction bad[] = {build_bump(0.0, 1.0)};
    CHECK_THROWS_AS((void)directional_differential_fd(lin, phi, bad), std::invalid_argument);
}

TEST_CASE("third-order differentials work and order four is rejected") {
    const TestFunction phi = build_in_Aq(MollifierSpec{2});
    const TestFunction p1 = build_delta_moment_companion(1);
    const TestFunction p2 = build_delta_moment_companion(2);
    const TestFunction p3 = build_delta_moment_companion(3);
    // cubic functional: d³ of <φ|φ><ξ,φ> has a clean closed form at A_2 points
    auto cubic = [](const TestFunction& f) { return inner_product(f, f) * moment(f, 1); };
    const TestFunction dirs3[] = {p1, p2, p3};
    // d³ = 2(<ψa|ψb><ξ,ψc> + <ψb|ψc><ξ,ψa> + <ψc|ψa><ξ,ψb>), since
    // <ξ,φ> = 0 kills every term still carrying the base point
    const double expected =
        2.0 * (inner_product(p1, p2) * moment(p3, 1) + inner_product(p2, p3) * moment(p1, 1) +
               inner_product(p3, p1) * moment(p2, 1));
    CHECK(directional_differential_fd(cubic, phi, dirs3) ==
          doctest::Approx(expected).epsilon(1e-3));

    const TestFunction dirs4[] = {p1, p1, p2, p3};
    CHECK_THROWS_AS((void)directional_differential_fd(cubic, phi, dirs4),
                    std::invalid_argument);
}

TEST_CASE("second-order differences agree with iterated first-order ones") {
    const TestFunction phi = build_in_Aq(MollifierSpec{2});
    const TestFunction psi = build_delta_moment_companion(2);
    const TestFunction psi2 = build_delta_moment_companion(1);
    auto quad = [](const TestFunction& f) { return inner_product(f, f); };

    const TestFunction dirs2[] = {psi, psi2};
    const double direct = directional_differential_fd(quad, phi, dirs2);

    // iterate: ψ2-difference of the ψ-differential
    const double h = 1e-4 / std::max(psi2.sup_norm(), 1e-12);
    const TestFunction dirs1[] = {psi};
    const TestFunction plus = linear_combine({1.0, h}, {phi, psi2});
    const TestFunction minus = linear_combine({1.0, -h}, {phi, psi2});
    const double iterated = (directional_differential_fd(quad, plus, dirs1) -
                             directional_differential_fd(quad, minus, dirs1)) /
                            (2.0 * h);
    CHECK(direct == doctest::Approx(iterated).epsilon(1e-4));
}

TEST_CASE("differential of a representative probe") {
    // d(R1)(φ)(ψ) at eps = 1 on an A_2 base point: R1 = <ξ,φ> exp<φ|φ>, and
    // <ξ,φ> = 0 kills the product-rule term with the exponential factor
    const TestFunction phi = build_in_Aq(MollifierSpec{2});
    const TestFunction psi = build_delta_moment_companion(1);
    const Representative r1 = make_representative("R1");
    const TestFunction dirs[] = {psi};
    const double expected = moment(psi, 1) * std::exp(inner_product(phi, phi));
    CHECK(directional_differential_fd(r1, 1.0, phi, 0.0, dirs) ==
          doctest::Approx(expected).epsilon(1e-5));
}
