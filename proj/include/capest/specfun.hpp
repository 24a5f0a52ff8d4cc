#pragma once

namespace capest::specfun {

inline constexpr int kBetaMaxIterations = 500;
inline constexpr double kBetaTolerance = 1e-14;

// ln Gamma(x) for x > 0. Throws DomainError for x <= 0.
double log_gamma(double x);

// Parameters of the regularized incomplete beta function I_x(a, b).
// Requires a > 0, b > 0, 0 <= x <= 1.
struct BetaParams {
    double a;
    double b;
    double x;
};

// I_x(a, b), evaluated by a modified-Lentz continued fraction. Switches to
// the complement 1 - I_{1-x}(b, a) when x > (a+1)/(a+b+2), where the
// fraction converges fastest. Throws DomainError on invalid parameters and
// NumericalError (carrying the iteration count) on non-convergence.
double regularized_incomplete_beta(const BetaParams& p);
double regularized_incomplete_beta(double a, double b, double x);

// Hypersphere {x in R^n : |x| = r}. n is the ambient dimension.
struct SphereSpec {
    int n;     // >= 2
    double r;  // > 0
};

// Surface area 2 pi^(n/2) / Gamma(n/2) * r^(n-1). For large n the linear
// value leaves the double range, so the log-domain field is authoritative.
struct SphereArea {
    double log_area;
    double area;  // exp(log_area); may round to 0 or overflow to infinity
};

SphereArea hypersphere_area(const SphereSpec& s);

// Fraction of the sphere's surface inside a cap of half-angle omega:
// (1/2) I_{sin^2(omega)}((n-1)/2, 1/2). Radius independent. omega must lie
// in [0, pi/2].
double cap_area_fraction(int n, double omega);

}  // namespace capest::specfun
