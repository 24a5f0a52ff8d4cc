#pragma once

#include <string>
#include <vector>

#include "capest/angle.hpp"

namespace capest {

// Ratio of the two effective cap areas, with the clamping and degeneracy
// flags that produced it.
struct CapacityEstimate {
    double capacity = 1.0;  // +infinity when degenerate
    Angle omega1;           // population effective half-angle, after clamping
    Angle omega2;           // identity effective half-angle, after clamping
    bool clamped_population = false;
    bool clamped_identity = false;
    bool degenerate = false;  // omega2 == 0: no finite capacity
};

// I_{sin^2 w1}((n-1)/2, 1/2) / I_{sin^2 w2}((n-1)/2, 1/2) for cap half-angles
// already in [0, pi/2]. Returns +infinity when the denominator vanishes.
double capacity_from_omegas(int n, Angle omega1, Angle omega2);

// Capacity of a population cap of half-angle theta against an identity cap of
// half-angle phi, both widened by the matcher margin delta. Sums beyond pi/2
// are clamped and flagged rather than rejected.
CapacityEstimate capacity(int n, Angle theta, Angle phi, Angle delta);

// Closed forms: n=2 arc-length ratio omega1/omega2, n=3 cap-area ratio
// (1 - cos omega1)/(1 - cos omega2). Independent cross-check of capacity().
double capacity_closed_form_low_dim(int n, Angle theta, Angle phi, Angle delta);

struct CurvePoint {
    double cos_delta = 0.0;
    CapacityEstimate estimate;
    bool ok = true;
    std::string error;  // set when ok == false
};

// One estimate per threshold, emitted in input order. A bad threshold yields
// an error entry without aborting the sweep.
std::vector<CurvePoint> capacity_curve(int n, Angle theta, Angle phi,
                                       const std::vector<double>& delta_cosines,
                                       AngleConvention delta_convention);

}  // namespace capest
