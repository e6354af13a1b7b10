#ifndef COLAB_ASYMPTOTICS_HPP
#define COLAB_ASYMPTOTICS_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "colab/grid_fn.hpp"

namespace colab {

// Fixed desk-scale rendering of O(·) clauses. All thresholds live here.
constexpr double kSlopeMargin = 0.1;        // "order n" accepted at slope >= n - margin
constexpr double kResidualCap = 0.05;       // rms residual cap for a trusted fit
constexpr double kMagnitudeFloor = 1e-300;  // clip; >= 75% clipped means "machine zero"
constexpr double kFloorFraction = 0.75;

struct EpsGrid {
    double eps_min = 1e-6;
    double eps_max = 1e-1;
    int n = 40;

    void validate() const;
    std::vector<double> points() const;  // geometric, ascending
};

struct MagSample {
    double eps = 0.0;
    double log_abs = 0.0;  // natural log of the magnitude, clipped at the floor
    bool floored = false;
};

struct AsymptoticFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
    std::pair<double, double> window{0.0, 0.0};
    int n_used = 0;
    int floor_hits = 0;
};

/// Thrown by fit_log_slope when fewer than 8 unclipped samples remain in the
/// window; upstream this reads "negligible to machine precision".
struct SignalBelowFloor : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Samples log-magnitudes over the grid. `log_abs_at` returns ln|value|; a
/// NaN or +inf result throws with the offending ε in the message.
std::vector<MagSample> sample_magnitudes(const std::function<double(double)>& log_abs_at,
                                         const EpsGrid& grid);

AsymptoticFit fit_log_slope(const std::vector<MagSample>& samples, double window_lo,
                            double window_hi);

/// Full-window fit plus fits over the lower and upper half-windows; a drift
/// between the halves flags non-pure-power behavior (log corrections).
struct DriftFits {
    AsymptoticFit full, lower, upper;
    double drift() const { return upper.slope - lower.slope; }
};
DriftFits fit_with_drift(const std::vector<MagSample>& samples, double window_lo,
                         double window_hi);

struct NegligibilityVerdict {
    bool verdict = false;
    bool below_floor = false;  // satisfied because the signal sits at the floor
    std::optional<AsymptoticFit> fit;
};

/// O(ε^n) verdict: slope >= n_target - margin with residual under the cap,
/// or the signal is identically at the magnitude floor.
NegligibilityVerdict classify_negligibility_order(const std::function<double(double)>& log_abs_at,
                                                  const EpsGrid& grid, int n_target);

struct ModeratenessResult {
    std::optional<int> order;  // smallest sufficient N; nullopt = not moderate up to N_max
    bool below_floor = false;
    std::optional<AsymptoticFit> fit;
};

/// Searches N = 0..N_max for the O(ε^{-N}) bound via slope >= -N - margin.
ModeratenessResult classify_moderateness_order(const std::function<double(double)>& log_abs_at,
                                               const EpsGrid& grid, int n_max);

}  // namespace colab

#endif
