#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace byzsgd {

/// Dense real vector used both for model parameters and for gradients.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t dim, double fill = 0.0) : coords_(dim, fill) {}
    explicit ParamVector(std::vector<double> coords) : coords_(std::move(coords)) {}
    ParamVector(std::initializer_list<double> coords) : coords_(coords) {}

    std::size_t dim() const noexcept { return coords_.size(); }
    bool empty() const noexcept { return coords_.empty(); }

    double& operator[](std::size_t i) noexcept { return coords_[i]; }
    double operator[](std::size_t i) const noexcept { return coords_[i]; }

    std::span<double> coords() noexcept { return coords_; }
    std::span<const double> coords() const noexcept { return coords_; }
    const std::vector<double>& values() const noexcept { return coords_; }

    auto begin() noexcept { return coords_.begin(); }
    auto end() noexcept { return coords_.end(); }
    auto begin() const noexcept { return coords_.begin(); }
    auto end() const noexcept { return coords_.end(); }

    /// True when no coordinate is NaN or infinite.
    bool all_finite() const noexcept;

    ParamVector& operator+=(const ParamVector& other);
    ParamVector& operator-=(const ParamVector& other);
    ParamVector& operator*=(double scale) noexcept;

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    std::vector<double> coords_;
};

ParamVector operator+(ParamVector lhs, const ParamVector& rhs);
ParamVector operator-(ParamVector lhs, const ParamVector& rhs);
ParamVector operator*(ParamVector lhs, double scale);
ParamVector operator*(double scale, ParamVector rhs);

double dot(const ParamVector& a, const ParamVector& b);
double squared_norm(const ParamVector& v) noexcept;
double norm(const ParamVector& v) noexcept;
double squared_distance(const ParamVector& a, const ParamVector& b);
double distance(const ParamVector& a, const ParamVector& b);

/// Throws DimensionMismatch unless both vectors have the same dimension.
void require_same_dim(const ParamVector& a, const ParamVector& b);

} // namespace byzsgd
