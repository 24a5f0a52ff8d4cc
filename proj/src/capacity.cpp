#include "capest/capacity.hpp"

#include <cmath>
#include <limits>

#include "capest/errors.hpp"
#include "capest/specfun.hpp"

namespace capest {

namespace {

// Both capacity operands go through this one path so that equal angles yield
// bitwise-equal beta values.
double cap_beta(int n, Angle omega) {
    const double s = std::sin(omega.radians());
    return specfun::regularized_incomplete_beta((n - 1) / 2.0, 0.5, s * s);
}

}  // namespace

double capacity_from_omegas(int n, Angle omega1, Angle omega2) {
    if (n < 2) throw DomainError("capacity dimension must be >= 2");
    const double numerator = cap_beta(n, omega1);
    const double denominator = cap_beta(n, omega2);
    if (denominator == 0.0) return std::numeric_limits<double>::infinity();
    return numerator / denominator;
}

CapacityEstimate capacity(int n, Angle theta, Angle phi, Angle delta) {
    if (n < 2) throw DomainError("capacity dimension must be >= 2");

    CapacityEstimate est;
    auto [w1, clamped1] = effective_angle(theta, delta);
    auto [w2, clamped2] = effective_angle(phi, delta);
    est.omega1 = w1;
    est.omega2 = w2;
    est.clamped_population = clamped1;
    est.clamped_identity = clamped2;

    if (w2.radians() == 0.0) {
        est.degenerate = true;
        est.capacity = std::numeric_limits<double>::infinity();
        return est;
    }
    est.capacity = capacity_from_omegas(n, w1, w2);
    return est;
}

double capacity_closed_form_low_dim(int n, Angle theta, Angle phi, Angle delta) {
    if (n != 2 && n != 3) {
        throw DomainError("closed form only defined for n = 2 or n = 3");
    }
    auto [w1, clamped1] = effective_angle(theta, delta);
    auto [w2, clamped2] = effective_angle(phi, delta);
    if (w2.radians() == 0.0) return std::numeric_limits<double>::infinity();
    if (n == 2) return w1.radians() / w2.radians();
    return (1.0 - std::cos(w1.radians())) / (1.0 - std::cos(w2.radians()));
}

std::vector<CurvePoint> capacity_curve(int n, Angle theta, Angle phi,
                                       const std::vector<double>& delta_cosines,
                                       AngleConvention delta_convention) {
    std::vector<CurvePoint> curve;
    curve.reserve(delta_cosines.size());
    for (double cos_delta : delta_cosines) {
        CurvePoint point;
        point.cos_delta = cos_delta;
        try {
            const Angle delta = angle_from_cosine(cos_delta, delta_convention);
            point.estimate = capacity(n, theta, phi, delta);
        } catch (const std::exception& e) {
            point.ok = false;
            point.error = e.what();
        }
        curve.push_back(std::move(point));
    }
    return curve;
}

}  // namespace capest
