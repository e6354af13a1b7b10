#include "colab/representatives.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace colab {

namespace {

constexpr double kMassTol = 1e-8;
constexpr double kHalfMomentZeroTol = 1e-12;
constexpr double kLogDoubleMin = -745.0;

double ipow(double x, int k) {
    double r = 1.0, b = x;
    for (int e = k; e > 0; e >>= 1) {
        if (e & 1) r *= b;
        b *= b;
    }
    return r;
}

int sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

// ===========================================================================
// Scalar kernels
// ===========================================================================

double kernel_g(double x) { return x / (1.0 + x * x); }

double kernel_g_deriv(double x, int l) {
    const double d = 1.0 + x * x;
    switch (l) {
        case 0:
            return kernel_g(x);
        case 1:
            return (1.0 - x * x) / (d * d);
        case 2:
            return 2.0 * x * (x * x - 3.0) / (d * d * d);
        case 3:
        case 4: {
            // central differences on the analytic second derivative
            const double h = 1e-5 * std::max(1.0, std::abs(x));
            auto g2 = [](double y) { return kernel_g_deriv(y, 2); };
            if (l == 3) return (g2(x + h) - g2(x - h)) / (2.0 * h);
            return (g2(x + h) - 2.0 * g2(x) + g2(x - h)) / (h * h);
        }
        default:
            throw std::invalid_argument("kernel_g_deriv: derivative order must be <= 4");
    }
}

double kernel_e(double x) {
    if (x <= 0.0) return 0.0;
    return std::exp(-1.0 / x);
}

double gamma_k(int k) {
    if (k < 1) throw std::invalid_argument("gamma_k: k must be >= 1");
    return k + 1.0 / k;
}

double sigma_cutoff(double x) {
    // e-based transition on t = 3/2 - |x|: equals e(t)/(e(t)+e(1-t)),
    // which is identically 1 for t >= 1 and 0 for t <= 0.
    const double t = 1.5 - std::abs(x);
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = kernel_e(t);
    const double b = kernel_e(1.0 - t);
    return a / (a + b);
}

double kernel_h(int k, double x) {
    if (k < 1) throw std::invalid_argument("kernel_h: k must be >= 1");
    const double s = sigma_cutoff(x);
    const double tg = 2.0 * kernel_g(x);
    double tail = 0.0;
    if (s < 1.0) tail = (1.0 - s) * sgn(x) * std::pow(std::abs(tg), gamma_k(k));
    return s * tg + tail;
}

// ===========================================================================
// Series evaluation in log-magnitude space
// ===========================================================================

namespace {

struct SeriesCtx {
    const TestFunction* phi;
    double ip;        // <φ|φ>
    double log_ip;
    double hm;        // <|ξ|^{1/2}, φ>
    double l1;        // ∫|φ|
    double sup_xi;    // max |support endpoint|
    std::vector<double> vk;  // <ξ^k, φ>, cached on demand

    double moment_k(int k) {
        while (static_cast<int>(vk.size()) < k) vk.push_back(moment(*phi, int(vk.size()) + 1));
        return vk[k - 1];
    }
};

SeriesCtx series_context(const TestFunction& phi, int k_max) {
    if (std::abs(integrate(phi) - 1.0) > kMassTol)
        throw std::invalid_argument("requires A0 membership");
    SeriesCtx ctx;
    ctx.phi = &phi;
    ctx.ip = inner_product(phi, phi);
    ctx.log_ip = std::log(ctx.ip);
    ctx.hm = half_moment(phi);
    ctx.sup_xi = std::max(std::abs(phi.support_lo()), std::abs(phi.support_hi()));
    double l1 = 0.0;
    for (double v : phi.samples()) l1 += std::abs(v);
    ctx.l1 = l1 * phi.dx();
    ctx.vk.reserve(k_max);
    for (int k = 1; k <= k_max; ++k) ctx.vk.push_back(moment(phi, k));
    return ctx;
}

/// log|g(X)| for X = exp(log_x) > 0; stable across the whole double range.
double log_g_of(double log_x) {
    if (log_x > 60.0) return -log_x;  // g(X) = 1/X up to relative X^{-2}
    if (log_x < -60.0) return log_x;  // g(X) = X up to relative X^2
    const double x = std::exp(log_x);
    return std::log(kernel_g(x));
}

/// Signed sum of terms carried as (log|t|, sign).
SeriesValue sum_log_terms(const std::vector<std::pair<double, int>>& terms) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [lt, s] : terms)
        if (s != 0 && lt > m) m = lt;
    if (!std::isfinite(m)) return SeriesValue{-std::numeric_limits<double>::infinity(), 0, true};
    double acc = 0.0;
    for (const auto& [lt, s] : terms)
        if (s != 0) acc += s * std::exp(lt - m);
    if (acc == 0.0) return SeriesValue{-std::numeric_limits<double>::infinity(), 0, true};
    return SeriesValue{m + std::log(std::abs(acc)), sgn(acc), true};
}

/// Truncation audit. The value is the k <= k_max head; whether that head is
/// trustworthy is decided by probing the would-be terms beyond it with their
/// exact magnitudes (cheap: one moment quadrature each) until they are
/// factorially dead, plus a crude majorant for everything past the probe.
/// Returns log of the absolute tail estimate.
double tail_log_estimate(int k_max, const std::function<double(int)>& log_term_k,
                         const std::function<double(int)>& log_majorant_k) {
    constexpr int kProbeLimit = 400;
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> logs;
    double rolling_peak = -std::numeric_limits<double>::infinity();
    int quiet = 0;
    int k = k_max + 1;
    for (; k <= k_max + kProbeLimit; ++k) {
        const double lt = log_term_k(k);
        logs.push_back(lt);
        m = std::max(m, lt);
        if (!std::isfinite(lt) || lt < rolling_peak - 60.0) {
            if (++quiet >= 8) break;
        } else {
            quiet = 0;
        }
        rolling_peak = std::max(rolling_peak, lt);
    }
    // majorant for the unprobed remainder; by now the factorial dominates
    // unless the series genuinely diverged off the probe window
    for (int j = k; j <= k + 40; ++j) {
        const double lb = log_majorant_k(j);
        logs.push_back(lb);
        m = std::max(m, lb);
    }
    if (!std::isfinite(m)) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (double lb : logs) acc += std::exp(lb - m);
    return m + std::log(acc);
}

}  // namespace

SeriesValue eval_P(const TestFunction& phi, const SeriesTruncation& trunc) {
    const int k_max = trunc.k_max;
    SeriesCtx ctx = series_context(phi, k_max);
    const double v = std::sqrt(ctx.ip) * ctx.hm;
    // e(v) underflows to exact zero below v ~ 1/745, taking the series with it
    if (v <= 0.0 || -1.0 / v < kLogDoubleMin)
        return SeriesValue{-std::numeric_limits<double>::infinity(), 0, true};
    const double log_ev = -1.0 / v;  // log e(v)

    auto log_term_abs = [&](int k) {
        const double vk = ctx.moment_k(k);
        if (vk == 0.0) return -std::numeric_limits<double>::infinity();
        const double gk = gamma_k(k);
        const double log_x = gk * ctx.log_ip + log_ev;
        return -std::lgamma(k + 1.0) + log_g_of(log_x) + gk * ctx.log_ip +
               std::log(std::abs(vk));
    };

    std::vector<std::pair<double, int>> terms;
    terms.reserve(k_max);
    for (int k = 1; k <= k_max; ++k) {
        const double vk = ctx.vk[k - 1];
        if (vk == 0.0) continue;
        terms.emplace_back(log_term_abs(k), sgn(vk));
    }
    SeriesValue out = sum_log_terms(terms);

    // Tail audit: exact magnitudes past k_max, then |v_k| <= S^k L1 with
    // g <= min(1/2, 1/X) for the unprobed remainder.
    const double log_s = std::log(std::max(ctx.sup_xi, 1e-300));
    const double log_l1 = std::log(std::max(ctx.l1, 1e-300));
    const double tail_log = tail_log_estimate(k_max, log_term_abs, [&](int k) {
        const double factor = std::min(gamma_k(k) * ctx.log_ip - std::log(2.0), -log_ev);
        return -std::lgamma(k + 1.0) + factor + k * log_s + log_l1;
    });
    const double log_tol =
        std::log(trunc.tail_tol) + (std::isfinite(out.log_abs) ? out.log_abs : 0.0);
    out.tail_converged = tail_log <= log_tol;
    return out;
}

SeriesValue eval_Q(const TestFunction& phi, const SeriesTruncation& trunc) {
    const int k_max = trunc.k_max;
    SeriesCtx ctx = series_context(phi, k_max);
    // half moments at the quadrature noise floor count as the trivial branch
    if (std::abs(ctx.hm) <= kHalfMomentZeroTol)
        return SeriesValue{-std::numeric_limits<double>::infinity(), 0, true};
    const double y = std::pow(ctx.ip, 1.5) * ctx.hm;  // argument of h_k
    const double log_abs_y = 1.5 * ctx.log_ip + std::log(std::abs(ctx.hm));

    auto h_factor = [&](int k) -> std::pair<double, int> {
        const double gk = gamma_k(k);
        if (log_abs_y <= std::log(1e4)) {
            const double h = kernel_h(k, y);
            if (h == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
            return {std::log(std::abs(h)), sgn(h)};
        }
        // far outside the cutoff: h_k(y) = sgn(y) |2g(y)|^{γ_k}, 2g(y) ~ 2/y
        return {gk * (std::log(2.0) - log_abs_y), sgn(y)};
    };
    auto log_term_abs = [&](int k) {
        const double vk = ctx.moment_k(k);
        if (vk == 0.0) return -std::numeric_limits<double>::infinity();
        const auto [log_h, sign_h] = h_factor(k);
        if (sign_h == 0) return -std::numeric_limits<double>::infinity();
        return -std::lgamma(k + 1.0) + log_h + gamma_k(k) * ctx.log_ip +
               std::log(std::abs(vk));
    };

    std::vector<std::pair<double, int>> terms;
    terms.reserve(k_max);
    for (int k = 1; k <= k_max; ++k) {
        const double vk = ctx.vk[k - 1];
        if (vk == 0.0) continue;
        const auto [log_h, sign_h] = h_factor(k);
        if (sign_h == 0) continue;
        terms.emplace_back(log_term_abs(k), sign_h * sgn(vk));
    }
    SeriesValue out = sum_log_terms(terms);

    // Tail audit: exact magnitudes, then |h_k| <= min(1, |2g(y)|^{γ_k}) and
    // |v_k| <= S^k L1 for the remainder.
    const double log_s = std::log(std::max(ctx.sup_xi, 1e-300));
    const double log_l1 = std::log(std::max(ctx.l1, 1e-300));
    const double tail_log = tail_log_estimate(k_max, log_term_abs, [&](int k) {
        const double gk = gamma_k(k);
        const double log_h_bound = std::min(0.0, gk * (std::log(2.0) - log_abs_y));
        return -std::lgamma(k + 1.0) + log_h_bound + gk * ctx.log_ip + k * log_s + log_l1;
    });
    const double log_tol =
        std::log(trunc.tail_tol) + (std::isfinite(out.log_abs) ? out.log_abs : 0.0);
    out.tail_converged = tail_log <= log_tol;
    return out;
}

double series_family_constant(const TestFunction& phi, int k_max) {
    SeriesCtx ctx = series_context(phi, k_max);
    double best = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        const double vk = ctx.vk[k - 1];
        if (vk == 0.0) continue;
        const double log_b = gamma_k(k) * ctx.log_ip + std::log(std::abs(vk));
        best = std::max(best, std::exp(log_b / k));
    }
    return best;
}

// ===========================================================================
// Smooth data
// ===========================================================================

SmoothDatum SmoothDatum::sine() {
    return SmoothDatum("sin", [](int order, double x) {
        switch (order % 4) {
            case 0: return std::sin(x);
            case 1: return std::cos(x);
            case 2: return -std::sin(x);
            default: return -std::cos(x);
        }
    });
}

SmoothDatum SmoothDatum::cosine() {
    return SmoothDatum("cos", [](int order, double x) {
        switch (order % 4) {
            case 0: return std::cos(x);
            case 1: return -std::sin(x);
            case 2: return -std::cos(x);
            default: return std::sin(x);
        }
    });
}

SmoothDatum SmoothDatum::polynomial(std::vector<double> coeffs) {
    if (coeffs.size() > 7) throw std::invalid_argument("polynomial datum: degree must be <= 6");
    return SmoothDatum("poly", [c = std::move(coeffs)](int order, double x) {
        double acc = 0.0;
        for (int j = static_cast<int>(c.size()) - 1; j >= order; --j) {
            double f = 1.0;
            for (int t = 0; t < order; ++t) f *= (j - t);
            acc = acc * x + f * c[j];
        }
        return acc;
    });
}

SmoothDatum SmoothDatum::gauss_window() {
    return SmoothDatum("gauss", [](int order, double x) {
        // d^n/dx^n exp(-x²) = (-1)^n H_n(x) exp(-x²), physicists' Hermite
        double h0 = 1.0, h1 = 2.0 * x;
        double h = order == 0 ? h0 : h1;
        for (int n = 1; n < order; ++n) {
            h = 2.0 * x * h1 - 2.0 * n * h0;
            h0 = h1;
            h1 = h;
        }
        const double s = (order % 2 == 0) ? 1.0 : -1.0;
        return s * h * std::exp(-x * x);
    });
}

SmoothDatum SmoothDatum::constant(double c) {
    return SmoothDatum("const", [c](int order, double) { return order == 0 ? c : 0.0; });
}

double SmoothDatum::deriv(int order, double x) const {
    if (order < 0) throw std::invalid_argument("SmoothDatum::deriv: order must be >= 0");
    return deriv_(order, x);
}

// ===========================================================================
// Named representatives
// ===========================================================================

Representative make_representative(const std::string& name, std::optional<SmoothDatum> datum) {
    Representative rep;
    if (name == "P") rep.name = RepName::P;
    else if (name == "Q") rep.name = RepName::Q;
    else if (name == "R0") rep.name = RepName::R0;
    else if (name == "R1") rep.name = RepName::R1;
    else if (name == "R2") rep.name = RepName::R2;
    else if (name == "R3") rep.name = RepName::R3;
    else if (name == "R4") rep.name = RepName::R4;
    else if (name == "R5") rep.name = RepName::R5;
    else if (name == "iota") rep.name = RepName::Iota;
    else if (name == "sigma") rep.name = RepName::Sigma;
    else throw std::invalid_argument("unknown representative: " + name);
    rep.smooth_datum = std::move(datum);
    if ((rep.name == RepName::Iota || rep.name == RepName::Sigma) && !rep.smooth_datum)
        throw std::invalid_argument("iota/sigma require a smooth datum");
    return rep;
}

bool ComplexValue::finite() const { return std::isfinite(std::exp(log_abs)) && std::isfinite(arg); }

double ComplexValue::re() const { return std::exp(log_abs) * std::cos(arg); }

double ComplexValue::im() const { return std::exp(log_abs) * std::sin(arg); }

ComplexValue ComplexValue::from_real(double x) {
    if (x == 0.0) return ComplexValue{-std::numeric_limits<double>::infinity(), 0.0, true};
    return ComplexValue{std::log(std::abs(x)), x < 0.0 ? std::acos(-1.0) : 0.0, true};
}

ComplexValue ComplexValue::from_log_signed(double log_abs, int sign) {
    if (sign == 0) return ComplexValue{-std::numeric_limits<double>::infinity(), 0.0, true};
    return ComplexValue{log_abs, sign < 0 ? std::acos(-1.0) : 0.0, true};
}

namespace {

double iota_value(const SmoothDatum& f, const TestFunction& phi, double x) {
    const auto s = phi.samples();
    double acc = 0.0;
    for (size_t i = 1; i + 1 < s.size(); ++i)
        acc += f(x + phi.grid_point(static_cast<int>(i))) * s[i];
    return acc * phi.dx();
}

}  // namespace

ComplexValue eval_named(const Representative& rep, const TestFunction& phi, double x) {
    switch (rep.name) {
        case RepName::P: {
            const SeriesValue s = eval_P(phi, rep.truncation);
            auto out = ComplexValue::from_log_signed(s.log_abs, s.sign);
            out.tail_converged = s.tail_converged;
            return out;
        }
        case RepName::Q: {
            const SeriesValue s = eval_Q(phi, rep.truncation);
            auto out = ComplexValue::from_log_signed(s.log_abs, s.sign);
            out.tail_converged = s.tail_converged;
            return out;
        }
        case RepName::R0:
            return ComplexValue{0.0, std::exp(inner_product(phi, phi)), true};
        case RepName::R1: {
            const double m1 = moment(phi, 1);
            auto out = ComplexValue::from_real(m1);
            out.log_abs += inner_product(phi, phi);
            return out;
        }
        case RepName::R2: {
            const double ip = inner_product(phi, phi);
            return ComplexValue{ip * ip * moment(phi, 1), 0.0, true};
        }
        case RepName::R3: {
            const double p0 = phi(0.0);
            return ComplexValue{p0 * p0 * moment(phi, 1), 0.0, true};
        }
        case RepName::R4: {
            auto out = ComplexValue::from_real(moment(phi, 1));
            out.log_abs += phi(0.0);
            return out;
        }
        case RepName::R5: {
            const double ip = inner_product(phi, phi);
            return ComplexValue{-ip, std::exp(2.0 * ip), true};
        }
        case RepName::Iota:
            return ComplexValue::from_real(iota_value(*rep.smooth_datum, phi, x));
        case RepName::Sigma:
            return ComplexValue::from_real((*rep.smooth_datum)(x));
    }
    throw std::logic_error("unreachable");
}

// ===========================================================================
// Embedding difference
// ===========================================================================

namespace {

/// Gauss–Legendre nodes/weights on [0,1], computed once by Newton iteration.
struct GaussRule {
    std::array<double, 32> node{}, weight{};
    GaussRule() {
        const int n = 32;
        for (int i = 0; i < n; ++i) {
            double t = std::cos(std::acos(-1.0) * (i + 0.75) / (n + 0.5));
            double p0 = 0.0, p1 = 0.0;
            for (int it = 0; it < 100; ++it) {
                p0 = 1.0;
                p1 = t;
                for (int j = 2; j <= n; ++j) {
                    const double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (t * p1 - p0) / (t * t - 1.0);
                const double step = p1 / dp;
                t -= step;
                if (std::abs(step) < 1e-15) break;
            }
            double p0b = 1.0, p1b = t;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * t * p1b - (j - 1.0) * p0b) / j;
                p0b = p1b;
                p1b = p2;
            }
            const double dp = n * (t * p1b - p0b) / (t * t - 1.0);
            node[i] = 0.5 * (t + 1.0);
            weight[i] = 1.0 / ((1.0 - t * t) * dp * dp);
        }
    }
};

const GaussRule& gauss_rule() {
    static const GaussRule rule;
    return rule;
}

/// f(x+h) - Σ_{j<=q} h^j f^(j)(x)/j!  via the integral-form remainder
/// h^{q+1}/q! ∫_0^1 (1-t)^q f^{(q+1)}(x+th) dt — no cancellation at small h.
double taylor_remainder(const SmoothDatum& f, double x, double h, int q) {
    const auto& rule = gauss_rule();
    double acc = 0.0;
    for (size_t i = 0; i < rule.node.size(); ++i) {
        const double t = rule.node[i];
        acc += rule.weight[i] * ipow(1.0 - t, q) * f.deriv(q + 1, x + t * h);
    }
    double hq = 1.0;
    for (int j = 0; j <= q; ++j) hq *= h;
    double qfact = 1.0;
    for (int j = 2; j <= q; ++j) qfact *= j;
    return acc * hq / qfact;
}

}  // namespace

double eval_iota_minus_sigma(const SmoothDatum& f, const TestFunction& phi, double x, double eps,
                             int vanishing_order) {
    if (vanishing_order < 0) throw std::invalid_argument("vanishing_order must be >= 0");
    const auto s = phi.samples();
    double acc = 0.0;
    for (size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] == 0.0) continue;
        const double z = phi.grid_point(static_cast<int>(i));
        acc += taylor_remainder(f, x, eps * z, vanishing_order) * s[i];
    }
    return acc * phi.dx();
}

// ===========================================================================
// Finite-difference directional differentials
// ===========================================================================

double directional_differential_fd(const std::function<double(const TestFunction&)>& functional,
                                   const TestFunction& phi,
                                   std::span<const TestFunction> directions) {
    const int k = static_cast<int>(directions.size());
    if (k > 3) throw std::invalid_argument("directional differentials limited to order 3");
    for (const auto& d : directions)
        if (std::abs(integrate(d)) > kMassTol)
            throw std::invalid_argument("direction must have zero mass");
    if (k == 0) return functional(phi);

    std::vector<double> h(k);
    for (int i = 0; i < k; ++i) h[i] = 1e-4 / std::max(directions[i].sup_norm(), 1e-12);

    auto stencil = [&](double shrink) {
        double acc = 0.0;
        std::vector<double> coeffs(k + 1);
        std::vector<TestFunction> fns;
        fns.reserve(k + 1);
        fns.push_back(phi);
        for (const auto& d : directions) fns.push_back(d);
        for (int corner = 0; corner < (1 << k); ++corner) {
            coeffs[0] = 1.0;
            int parity = 1;
            for (int i = 0; i < k; ++i) {
                const int s = (corner >> i) & 1 ? 1 : -1;
                coeffs[i + 1] = s * h[i] * shrink;
                parity *= s;
            }
            acc += parity * functional(linear_combine(coeffs, fns));
        }
        double denom = 1.0;
        for (int i = 0; i < k; ++i) denom *= 2.0 * h[i] * shrink;
        return acc / denom;
    };

    const double d1 = stencil(1.0);
    const double d2 = stencil(0.5);
    return (4.0 * d2 - d1) / 3.0;  // one Richardson level
}

double directional_differential_fd(const Representative& rep, double eps, const TestFunction& phi,
                                   double x, std::span<const TestFunction> directions) {
    auto functional = [&](const TestFunction& f) { return eval_named(rep, scale(f, eps), x).re(); };
    return directional_differential_fd(functional, phi, directions);
}

}  // namespace colab
