#include "latgibbs/profile.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace latgibbs {

Vec LinearMap::apply(const Vec& x) const {
    Vec y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += at(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

Profile Profile::zero(std::size_t dim_d, std::size_t dim_m) {
    Profile p;
    p.d_ = dim_d;
    p.m_ = dim_m;
    p.offset_.assign(dim_m, 0.0);
    p.base_ = [dim_m](const Vec&) { return Vec(dim_m, 0.0); };
    p.label_ = "zero";
    return p;
}

Profile Profile::constant(std::size_t dim_d, Vec value) {
    // a constant is pure offset; the base is identically zero
    Profile p = zero(dim_d, value.size());
    p.offset_ = std::move(value);
    p.label_ = "constant";
    return p;
}

Profile Profile::linear(std::size_t dim_d, LinearMap m) {
    if (m.cols != dim_d) throw std::invalid_argument("linear profile: matrix cols != d");
    Profile p;
    p.d_ = dim_d;
    p.m_ = m.rows;
    p.offset_.assign(m.rows, 0.0);
    p.label_ = "linear";
    p.base_ = [mm = std::move(m)](const Vec& x) { return mm.apply(x); };
    return p;
}

Profile Profile::sinusoid(std::size_t dim_d, double amplitude, Vec wave) {
    if (wave.size() != dim_d) throw std::invalid_argument("sinusoid: wave vector size != d");
    Profile p;
    p.d_ = dim_d;
    p.m_ = 1;
    p.offset_.assign(1, 0.0);
    p.label_ = "sinusoid";
    const double two_pi = 2.0 * std::acos(-1.0);
    p.base_ = [amplitude, wave = std::move(wave), two_pi](const Vec& x) {
        double phase = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) phase += wave[i] * x[i];
        return Vec{amplitude * std::sin(two_pi * phase)};
    };
    return p;
}

Profile Profile::step(std::size_t dim_d, Vec above, Vec below, Vec point, Vec normal) {
    if (above.size() != below.size()) throw std::invalid_argument("step: value sizes differ");
    if (point.size() != dim_d || normal.size() != dim_d)
        throw std::invalid_argument("step: point/normal size != d");
    Profile p;
    p.d_ = dim_d;
    p.m_ = above.size();
    p.offset_.assign(above.size(), 0.0);
    p.label_ = "step";
    p.base_ = [above = std::move(above), below = std::move(below), point = std::move(point),
               normal = std::move(normal)](const Vec& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - point[i]) * normal[i];
        if (s > 0.0) return above;
        if (s < 0.0) return below;
        // symmetric value on the interface itself, so that swapping the two
        // states and flipping the normal is the same function everywhere
        Vec mid(above.size());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (above[i] + below[i]);
        return mid;
    };
    return p;
}

Profile Profile::linear_plus_step(std::size_t dim_d, LinearMap m, Vec above, Vec below,
                                  Vec point, Vec normal) {
    if (m.rows != above.size()) throw std::invalid_argument("linear_plus_step: m mismatch");
    Profile lin = linear(dim_d, std::move(m));
    Profile st = step(dim_d, std::move(above), std::move(below), std::move(point),
                      std::move(normal));
    Profile p;
    p.d_ = dim_d;
    p.m_ = lin.m_;
    p.offset_.assign(lin.m_, 0.0);
    p.label_ = "linear_plus_step";
    p.base_ = [lin, st](const Vec& x) {
        Vec a = lin.base_value(x);
        Vec b = st.base_value(x);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        return a;
    };
    return p;
}

Profile Profile::custom(std::size_t dim_d, std::size_t dim_m, Fn fn, std::string label) {
    Profile p;
    p.d_ = dim_d;
    p.m_ = dim_m;
    p.offset_.assign(dim_m, 0.0);
    p.base_ = std::move(fn);
    p.label_ = std::move(label);
    return p;
}

Profile Profile::with_offset(Vec z) const {
    if (z.size() != m_) throw std::invalid_argument("offset size != m");
    Profile p = *this;
    for (std::size_t i = 0; i < m_; ++i) p.offset_[i] += z[i];
    return p;
}

Vec Profile::operator()(const Vec& x) const {
    Vec v = base_(x);
    for (std::size_t i = 0; i < m_; ++i) v[i] += offset_[i];
    return v;
}

Vec Profile::base_value(const Vec& x) const { return base_(x); }

Profile Profile::stripped() const {
    Profile p = *this;
    p.offset_.assign(m_, 0.0);
    return p;
}

}  // namespace latgibbs
