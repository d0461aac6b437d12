#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace latgibbs {

// Compensated accumulator; keeps sums deterministic and accurate in the
// incremental bookkeeping (energy deltas, constraint deviations).
class KahanSum {
  public:
    KahanSum() = default;
    explicit KahanSum(double v) : sum_(v) {}

    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    void reset(double v) {
        sum_ = v;
        comp_ = 0.0;
    }
    double value() const { return sum_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct QuadRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // sum to 2
};

/// Gauss-Legendre nodes/weights by Newton iteration on Legendre polynomials.
QuadRule gauss_legendre(int n);

/// ∫_a^b f dx with an n-point Gauss-Legendre rule.
double integrate_gl(const std::function<double(double)>& f, double a, double b, int n);

/// Adaptive 1-D quadrature (panel-split Gauss-Legendre), absolute/relative
/// tolerance, returns value; writes the achieved error estimate if asked.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, double* err_estimate = nullptr, int max_depth = 40);

/// Maximize a unimodal function on [a,b] by golden-section search.
/// Returns the argmax; writes the max value if asked.
double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double tol, double* fmax = nullptr);

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (std::isinf(b) && b < 0) return a;
    return a + std::log1p(std::exp(b - a));
}

/// Shortest round-trip decimal formatting (CSV output must be bit-stable).
std::string format_double(double v);

/// Sample mean / stderr via batch means (20 batches) — robust to mild
/// autocorrelation without storing the full series twice.
struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};
MeanStderr batch_mean_stderr(const std::vector<double>& xs, int batches = 20);

}  // namespace latgibbs
