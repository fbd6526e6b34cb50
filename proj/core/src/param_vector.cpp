#include "byzsgd/param_vector.hpp"

#include <cmath>
#include <string>

#include "byzsgd/error.hpp"

namespace byzsgd {

bool ParamVector::all_finite() const noexcept {
    for (double x : coords_)
        if (!std::isfinite(x))
            return false;
    return true;
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
    require_same_dim(*this, other);
    for (std::size_t i = 0; i < coords_.size(); ++i)
        coords_[i] += other.coords_[i];
    return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
    require_same_dim(*this, other);
    for (std::size_t i = 0; i < coords_.size(); ++i)
        coords_[i] -= other.coords_[i];
    return *this;
}

ParamVector& ParamVector::operator*=(double scale) noexcept {
    for (double& x : coords_)
        x *= scale;
    return *this;
}

ParamVector operator+(ParamVector lhs, const ParamVector& rhs) { return lhs += rhs; }
ParamVector operator-(ParamVector lhs, const ParamVector& rhs) { return lhs -= rhs; }
ParamVector operator*(ParamVector lhs, double scale) { return lhs *= scale; }
ParamVector operator*(double scale, ParamVector rhs) { return rhs *= scale; }

double dot(const ParamVector& a, const ParamVector& b) {
    require_same_dim(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        acc += a[i] * b[i];
    return acc;
}

double squared_norm(const ParamVector& v) noexcept {
    double acc = 0.0;
    for (double x : v)
        acc += x * x;
    return acc;
}

double norm(const ParamVector& v) noexcept { return std::sqrt(squared_norm(v)); }

double squared_distance(const ParamVector& a, const ParamVector& b) {
    require_same_dim(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

double distance(const ParamVector& a, const ParamVector& b) { return std::sqrt(squared_distance(a, b)); }

void require_same_dim(const ParamVector& a, const ParamVector& b) {
    if (a.dim() != b.dim())
        throw Error(Errc::DimensionMismatch,
                    "dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
}

} // namespace byzsgd
