#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "latgibbs/geometry.hpp"

namespace latgibbs {

/// Row-major m x d matrix for affine profiles u(x) = M x.
struct LinearMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;  // rows*cols

    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
    Vec apply(const Vec& x) const;
};

/// Macroscopic profile u : R^d -> R^m. Profiles carry an explicit additive
/// offset which estimators strip before running; free energies depend on u
/// only through differences, so the stripped run is an exact change of
/// variables and translation invariance holds bit-for-bit.
class Profile {
  public:
    using Fn = std::function<Vec(const Vec&)>;

    Profile() = default;

    static Profile zero(std::size_t dim_d, std::size_t dim_m);
    static Profile constant(std::size_t dim_d, Vec value);
    static Profile linear(std::size_t dim_d, LinearMap m);
    /// amplitude * sin(2 pi wave . x), scalar field.
    static Profile sinusoid(std::size_t dim_d, double amplitude, Vec wave);
    /// above if (x - point) . normal > 0, otherwise below.
    static Profile step(std::size_t dim_d, Vec above, Vec below, Vec point, Vec normal);
    static Profile linear_plus_step(std::size_t dim_d, LinearMap m, Vec above, Vec below,
                                    Vec point, Vec normal);
    static Profile custom(std::size_t dim_d, std::size_t dim_m, Fn fn, std::string label);

    Profile with_offset(Vec z) const;

    std::size_t dim_d() const { return d_; }
    std::size_t dim_m() const { return m_; }
    const Vec& offset() const { return offset_; }
    const std::string& label() const { return label_; }

    /// Full value including the offset.
    Vec operator()(const Vec& x) const;
    /// Value of the offset-stripped base profile.
    Vec base_value(const Vec& x) const;
    /// Copy with zero offset.
    Profile stripped() const;

  private:
    std::size_t d_ = 0;
    std::size_t m_ = 0;
    Fn base_;
    Vec offset_;
    std::string label_;
};

}  // namespace latgibbs
