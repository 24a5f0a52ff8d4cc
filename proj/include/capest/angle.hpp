#pragma once

#include <compare>
#include <string>
#include <utility>

namespace capest {

// An angle in radians restricted to [0, pi], the range of arccos.
class Angle {
public:
    constexpr Angle() noexcept = default;
    explicit Angle(double radians);

    double radians() const noexcept { return radians_; }

    auto operator<=>(const Angle&) const = default;

private:
    double radians_ = 0.0;
};

// How a cosine similarity threshold maps to an angle.
enum class AngleConvention {
    Half,  // s -> arccos(s) / 2
    Full,  // s -> arccos(s)
};

// Cosines outside [-1, 1] by at most 1e-9 are clamped to the boundary;
// anything further out throws DomainError.
Angle angle_from_cosine(double s, AngleConvention conv);

// base + delta clamped to pi/2, plus the clamped flag. The unclamped value
// is composed through cos(base + delta) = cos(base)cos(delta) - sin(base)sin(delta).
std::pair<Angle, bool> effective_angle(Angle base, Angle delta);

std::string to_string(AngleConvention conv);
AngleConvention angle_convention_from_string(const std::string& name);

}  // namespace capest
