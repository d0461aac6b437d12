#include "latgibbs/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>

namespace latgibbs {

namespace {

QuadRule compute_gl(int n) {
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < n; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n.
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[n - 1 - i] = x;
        rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    // enforce exact symmetry so symmetric integrands cancel to the last ulp
    for (int i = 0; i < n / 2; ++i) {
        rule.nodes[i] = -rule.nodes[n - 1 - i];
        rule.weights[i] = rule.weights[n - 1 - i];
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

QuadRule gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, QuadRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gl(n)).first;
    return it->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n) {
    QuadRule rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    KahanSum acc;
    for (int i = 0; i < n; ++i) acc.add(rule.weights[i] * f(mid + half * rule.nodes[i]));
    return half * acc.value();
}

namespace {

double adapt_rec(const std::function<double(double)>& f, double a, double b, double whole,
                 double tol, int depth, int max_depth, double& err_acc) {
    double mid = 0.5 * (a + b);
    double left = integrate_gl(f, a, mid, 15);
    double right = integrate_gl(f, mid, b, 15);
    double diff = std::abs(left + right - whole);
    if (depth >= max_depth || diff < tol) {
        err_acc += diff;
        return left + right;
    }
    return adapt_rec(f, a, mid, left, tol / 2, depth + 1, max_depth, err_acc) +
           adapt_rec(f, mid, b, right, tol / 2, depth + 1, max_depth, err_acc);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, double* err_estimate, int max_depth) {
    double whole = integrate_gl(f, a, b, 15);
    double err = 0.0;
    double v = adapt_rec(f, a, b, whole, tol, 0, max_depth, err);
    if (err_estimate) *err_estimate = err;
    return v;
}

double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double tol, double* fmax) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    double x = 0.5 * (a + b);
    if (fmax) *fmax = f(x);
    return x;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

MeanStderr batch_mean_stderr(const std::vector<double>& xs, int batches) {
    MeanStderr out;
    out.n = xs.size();
    if (xs.empty()) return out;
    KahanSum total;
    for (double x : xs) total.add(x);
    out.mean = total.value() / static_cast<double>(xs.size());
    if (xs.size() < static_cast<std::size_t>(2 * batches)) {
        // too few samples for batching; fall back to iid stderr
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        double var = xs.size() > 1 ? ss / (xs.size() - 1.0) : 0.0;
        out.stderr_ = std::sqrt(var / xs.size());
        return out;
    }
    std::size_t bl = xs.size() / batches;
    std::vector<double> bm;
    bm.reserve(batches);
    for (int b = 0; b < batches; ++b) {
        KahanSum acc;
        for (std::size_t i = b * bl; i < (b + 1) * bl; ++i) acc.add(xs[i]);
        bm.push_back(acc.value() / static_cast<double>(bl));
    }
    double mean_b = 0.0;
    for (double m : bm) mean_b += m;
    mean_b /= bm.size();
    double ss = 0.0;
    for (double m : bm) ss += (m - mean_b) * (m - mean_b);
    double var_b = ss / (bm.size() - 1.0);
    out.stderr_ = std::sqrt(var_b / bm.size());
    return out;
}

}  // namespace latgibbs
