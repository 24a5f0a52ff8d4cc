#include "capest/angle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "capest/errors.hpp"

namespace capest {

namespace {
constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kCosineSlack = 1e-9;
}  // namespace

Angle::Angle(double radians) : radians_(radians) {
    if (!(radians >= 0.0 && radians <= std::numbers::pi)) {
        throw DomainError("angle must lie in [0, pi], got " + std::to_string(radians));
    }
}

Angle angle_from_cosine(double s, AngleConvention conv) {
    if (!(s >= -1.0 - kCosineSlack && s <= 1.0 + kCosineSlack)) {
        throw DomainError("cosine similarity must lie in [-1, 1], got " + std::to_string(s));
    }
    const double clamped = std::clamp(s, -1.0, 1.0);
    const double a = std::acos(clamped);
    return Angle(conv == AngleConvention::Half ? a / 2.0 : a);
}

std::pair<Angle, bool> effective_angle(Angle base, Angle delta) {
    const double b = base.radians();
    const double d = delta.radians();
    if (b + d > kHalfPi) {
        return {Angle(kHalfPi), true};
    }
    // For sums within [0, pi/2] the cosine composition round-trips exactly
    // through acos.
    const double c = std::cos(b) * std::cos(d) - std::sin(b) * std::sin(d);
    return {Angle(std::acos(std::clamp(c, -1.0, 1.0))), false};
}

std::string to_string(AngleConvention conv) {
    return conv == AngleConvention::Half ? "half" : "full";
}

AngleConvention angle_convention_from_string(const std::string& name) {
    if (name == "half") return AngleConvention::Half;
    if (name == "full") return AngleConvention::Full;
    throw DomainError("unknown angle convention '" + name + "' (expected 'half' or 'full')");
}

}  // namespace capest
