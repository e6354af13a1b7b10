#include "colab/asymptotics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace colab {

void EpsGrid::validate() const {
    if (!(0.0 < eps_min && eps_min < eps_max && eps_max <= 1.0))
        throw std::invalid_argument("EpsGrid: need 0 < eps_min < eps_max <= 1");
    if (n < 8) throw std::invalid_argument("EpsGrid: need n >= 8");
}

std::vector<double> EpsGrid::points() const {
    validate();
    std::vector<double> p(n);
    const double la = std::log(eps_min), lb = std::log(eps_max);
    for (int i = 0; i < n; ++i) p[i] = std::exp(la + (lb - la) * i / (n - 1));
    p.front() = eps_min;
    p.back() = eps_max;
    return p;
}

std::vector<MagSample> sample_magnitudes(const std::function<double(double)>& log_abs_at,
                                         const EpsGrid& grid) {
    const double floor_log = std::log(kMagnitudeFloor);
    std::vector<MagSample> out;
    for (double eps : grid.points()) {
        double la = log_abs_at(eps);
        if (std::isnan(la) || la == std::numeric_limits<double>::infinity()) {
            std::ostringstream msg;
            msg << "non-finite magnitude at eps = " << eps;
            throw std::runtime_error(msg.str());
        }
        MagSample s;
        s.eps = eps;
        s.floored = la <= floor_log;
        s.log_abs = s.floored ? floor_log : la;
        out.push_back(s);
    }
    return out;
}

AsymptoticFit fit_log_slope(const std::vector<MagSample>& samples, double window_lo,
                            double window_hi) {
    AsymptoticFit fit;
    fit.window = {window_lo, window_hi};
    std::vector<std::pair<double, double>> pts;  // (log eps, log mag)
    for (const auto& s : samples) {
        if (s.eps < window_lo || s.eps > window_hi) continue;
        if (s.floored) {
            ++fit.floor_hits;
            continue;
        }
        pts.emplace_back(std::log(s.eps), s.log_abs);
    }
    fit.n_used = static_cast<int>(pts.size());
    if (fit.n_used < 8) throw SignalBelowFloor("signal below floor");

    double sx = 0, sy = 0;
    for (auto& [x, y] : pts) {
        sx += x;
        sy += y;
    }
    const double mx = sx / fit.n_used, my = sy / fit.n_used;
    double sxx = 0, sxy = 0;
    for (auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0;
    for (auto& [x, y] : pts) {
        const double r = y - (fit.intercept + fit.slope * x);
        rss += r * r;
    }
    fit.residual_rms = std::sqrt(rss / fit.n_used);
    return fit;
}

DriftFits fit_with_drift(const std::vector<MagSample>& samples, double window_lo,
                         double window_hi) {
    DriftFits d{fit_log_slope(samples, window_lo, window_hi), {}, {}};
    const double mid = std::exp(0.5 * (std::log(window_lo) + std::log(window_hi)));
    d.lower = fit_log_slope(samples, window_lo, mid);
    d.upper = fit_log_slope(samples, mid, window_hi);
    return d;
}

namespace {

bool mostly_floored(const std::vector<MagSample>& samples) {
    int hits = 0;
    for (const auto& s : samples) hits += s.floored ? 1 : 0;
    return hits >= kFloorFraction * samples.size();
}

}  // namespace

NegligibilityVerdict classify_negligibility_order(const std::function<double(double)>& log_abs_at,
                                                  const EpsGrid& grid, int n_target) {
    auto samples = sample_magnitudes(log_abs_at, grid);
    NegligibilityVerdict v;
    if (mostly_floored(samples)) {
        v.verdict = true;
        v.below_floor = true;
        return v;
    }
    try {
        auto fit = fit_log_slope(samples, grid.eps_min, grid.eps_max);
        v.fit = fit;
        v.verdict = fit.slope >= n_target - kSlopeMargin && fit.residual_rms <= kResidualCap;
    } catch (const SignalBelowFloor&) {
        v.verdict = true;
        v.below_floor = true;
    }
    return v;
}

ModeratenessResult classify_moderateness_order(const std::function<double(double)>& log_abs_at,
                                               const EpsGrid& grid, int n_max) {
    auto samples = sample_magnitudes(log_abs_at, grid);
    ModeratenessResult r;
    if (mostly_floored(samples)) {
        r.order = 0;
        r.below_floor = true;
        return r;
    }
    AsymptoticFit fit;
    try {
        fit = fit_log_slope(samples, grid.eps_min, grid.eps_max);
    } catch (const SignalBelowFloor&) {
        r.order = 0;
        r.below_floor = true;
        return r;
    }
    r.fit = fit;
    for (int n = 0; n <= n_max; ++n) {
        if (fit.slope >= -n - kSlopeMargin) {
            r.order = n;
            return r;
        }
    }
    return r;
}

}  // namespace colab
