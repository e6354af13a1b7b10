#include "colab/grid_fn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace colab {

namespace {

// Neumaier compensated sum; fixed evaluation order keeps results deterministic.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double ipow(double x, int k) {
    double r = 1.0, b = x;
    for (int e = k; e > 0; e >>= 1) {
        if (e & 1) r *= b;
        b *= b;
    }
    return r;
}

void validate_grid(double lo, double hi, const std::vector<double>& s) {
    if (!(lo < hi)) throw std::invalid_argument("TestFunction: support_lo must be < support_hi");
    if (s.size() < 64) throw std::invalid_argument("TestFunction: n_points must be >= 64");
    if (s.size() % 2 != 0) throw std::invalid_argument("TestFunction: n_points must be even");
    if (s.front() != 0.0 || s.back() != 0.0)
        throw std::invalid_argument("TestFunction: boundary samples must be zero");
}

}  // namespace

TestFunction::TestFunction(double support_lo, double support_hi, std::vector<double> samples)
    : lo_(support_lo), hi_(support_hi), samples_(std::move(samples)) {
    validate_grid(lo_, hi_, samples_);
}

TestFunction TestFunction::zero(double support_lo, double support_hi, int n_points) {
    return TestFunction(support_lo, support_hi, std::vector<double>(n_points, 0.0));
}

TestFunction TestFunction::from_callable(double support_lo, double support_hi, int n_points,
                                         const std::function<double(double)>& f) {
    std::vector<double> s(n_points);
    const double h = (support_hi - support_lo) / (n_points - 1);
    for (int i = 1; i + 1 < n_points; ++i) s[i] = f(support_lo + i * h);
    s.front() = 0.0;
    s.back() = 0.0;
    return TestFunction(support_lo, support_hi, std::move(s));
}

bool TestFunction::is_zero() const {
    return std::all_of(samples_.begin(), samples_.end(), [](double v) { return v == 0.0; });
}

double TestFunction::sup_norm() const {
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
}

double TestFunction::operator()(double x) const {
    if (x <= lo_ || x >= hi_) return 0.0;
    const int n = n_points();
    const double h = dx();
    double u = (x - lo_) / h;
    int i0 = static_cast<int>(std::floor(u)) - 1;
    i0 = std::clamp(i0, 0, n - 4);
    const double t = u - i0;  // in [0,3] over the 4-point stencil
    // Lagrange weights for nodes 0,1,2,3.
    const double w0 = -(t - 1) * (t - 2) * (t - 3) / 6.0;
    const double w1 = t * (t - 2) * (t - 3) / 2.0;
    const double w2 = -t * (t - 1) * (t - 3) / 2.0;
    const double w3 = t * (t - 1) * (t - 2) / 6.0;
    return w0 * samples_[i0] + w1 * samples_[i0 + 1] + w2 * samples_[i0 + 2] +
           w3 * samples_[i0 + 3];
}

TestFunction TestFunction::translated(double shift) const {
    return TestFunction(lo_ + shift, hi_ + shift, samples_);
}

double integrate(const TestFunction& f) {
    const auto s = f.samples();
    CompensatedSum acc;
    for (size_t i = 1; i + 1 < s.size(); ++i) acc.add(s[i]);
    acc.add(0.5 * (s.front() + s.back()));
    return f.dx() * acc.value();
}

double moment(const TestFunction& f, int k) {
    if (k < 0) throw std::invalid_argument("moment: k must be >= 0");
    if (k == 0) return integrate(f);
    const auto s = f.samples();
    CompensatedSum acc;
    for (size_t i = 1; i + 1 < s.size(); ++i)
        acc.add(ipow(f.grid_point(static_cast<int>(i)), k) * s[i]);
    return f.dx() * acc.value();
}

double half_moment(const TestFunction& f) {
    const int m = f.n_points();
    CompensatedSum acc;
    // One-sided piece ∫_0^b sqrt(ξ) f(±ξ) dξ = ∫_0^sqrt(b) 2u² f(±u²) du.
    auto side = [&](double b, double sign) {
        if (b <= 0.0) return;
        const double ub = std::sqrt(b);
        const double h = ub / (m - 1);
        CompensatedSum side_acc;
        for (int i = 1; i + 1 < m; ++i) {
            const double u = i * h;
            side_acc.add(2.0 * u * u * f(sign * u * u));
        }
        // u=0 integrand is 0; u=ub lands on the support boundary where f = 0.
        acc.add(h * side_acc.value());
    };
    side(f.support_hi(), +1.0);
    side(-f.support_lo(), -1.0);
    return acc.value();
}

double inner_product(const TestFunction& f, const TestFunction& h) {
    const bool same_grid = f.support_lo() == h.support_lo() &&
                           f.support_hi() == h.support_hi() && f.n_points() == h.n_points();
    if (same_grid) {
        const auto a = f.samples(), b = h.samples();
        CompensatedSum acc;
        for (size_t i = 1; i + 1 < a.size(); ++i) acc.add(a[i] * b[i]);
        return f.dx() * acc.value();
    }
    const double lo = std::max(f.support_lo(), h.support_lo());
    const double hi = std::min(f.support_hi(), h.support_hi());
    if (!(lo < hi)) return 0.0;
    const int n = std::max(f.n_points(), h.n_points());
    const double step = (hi - lo) / (n - 1);
    CompensatedSum acc;
    for (int i = 0; i < n; ++i) {
        const double x = lo + i * step;
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        acc.add(w * f(x) * h(x));
    }
    return step * acc.value();
}

double v_functional(const TestFunction& f) {
    if (f.is_zero()) throw std::domain_error("undefined v on zero function");
    return std::sqrt(inner_product(f, f)) * half_moment(f);
}

TestFunction scale(const TestFunction& f, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("invalid scale");
    if (eps == 1.0) return f;
    std::vector<double> s(f.samples().begin(), f.samples().end());
    const double inv = 1.0 / eps;
    for (double& v : s) v *= inv;
    return TestFunction(eps * f.support_lo(), eps * f.support_hi(), std::move(s));
}

TestFunction linear_combine(std::span<const double> coeffs, std::span<const TestFunction> fns) {
    if (coeffs.empty() || coeffs.size() != fns.size())
        throw std::invalid_argument("linear_combine: need equally many coefficients and functions");
    bool same_grid = true;
    for (const auto& g : fns)
        same_grid = same_grid && g.support_lo() == fns[0].support_lo() &&
                    g.support_hi() == fns[0].support_hi() && g.n_points() == fns[0].n_points();
    if (same_grid) {
        std::vector<double> s(fns[0].n_points(), 0.0);
        for (size_t j = 0; j < fns.size(); ++j) {
            const auto a = fns[j].samples();
            for (size_t i = 0; i < s.size(); ++i) s[i] += coeffs[j] * a[i];
        }
        s.front() = 0.0;
        s.back() = 0.0;
        return TestFunction(fns[0].support_lo(), fns[0].support_hi(), std::move(s));
    }
    double lo = fns[0].support_lo(), hi = fns[0].support_hi();
    int n = fns[0].n_points();
    for (const auto& g : fns) {
        lo = std::min(lo, g.support_lo());
        hi = std::max(hi, g.support_hi());
        n = std::max(n, g.n_points());
    }
    const double step = (hi - lo) / (n - 1);
    std::vector<double> s(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        const double x = lo + i * step;
        double v = 0.0;
        for (size_t j = 0; j < fns.size(); ++j) v += coeffs[j] * fns[j](x);
        s[i] = v;
    }
    return TestFunction(lo, hi, std::move(s));
}

}  // namespace colab
