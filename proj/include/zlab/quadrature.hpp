#pragma once

#include <cmath>
#include <vector>

#include "zlab/numerics.hpp"

namespace zlab {

// Gauss-Legendre nodes and weights on (-1, 1).  Roots via Newton iteration
// from the Tricomi initial guess; weights from the derivative formula.
struct GaussLegendre {
    std::vector<double> x, w;

    explicit GaussLegendre(int n) : x(n), w(n) {
        if (n < 1) throw DomainError("GaussLegendre: need at least one node");
        for (int k = 1; k <= n; ++k) {
            double xi = std::cos(M_PI * (4.0 * k - 1.0) / (4.0 * n + 2.0)) *
                        (1.0 - 1.0 / (8.0 * n * n) + 1.0 / (8.0 * n * n * n));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = xi;
                for (int i = 2; i <= n; ++i) {
                    double pi = ((2.0 * i - 1.0) * xi * p1 - (i - 1.0) * p0) / i;
                    p0 = p1;
                    p1 = pi;
                }
                dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
                double dx = p1 / dp;
                xi -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            x[k - 1] = xi;
            w[k - 1] = 2.0 / ((1.0 - xi * xi) * dp * dp);
        }
    }
};

// Radial rule for one complex coordinate: the substitution t = s/(1-s) maps
// (0,1) -> (0,inf); integrands of the family t^a (1+t)^{-m} become
// polynomials in s, so the rule is exact on them up to degree 2*level-1.
struct RadialRule {
    std::vector<double> t, w; // integrates f(t) dt over (0, inf)

    explicit RadialRule(int level) {
        GaussLegendre gl(level);
        t.resize(level);
        w.resize(level);
        for (int i = 0; i < level; ++i) {
            double s = 0.5 * (gl.x[i] + 1.0);
            double ws = 0.5 * gl.w[i];
            double om = 1.0 - s;
            t[i] = s / om;
            w[i] = ws / (om * om);
        }
    }
};

// Joint radial rule for a single CP^2 factor.  The plain tensor rule in
// (t1, t2) is not exact on t1^a t2^b (1+t1+t2)^{-m}; the Dirichlet
// parametrization t1 = tau*xi, t2 = tau*(1-xi) separates those integrands
// into two 1-d pieces that the mapped Gauss rules integrate exactly.
struct SimplexRadialRule {
    std::vector<double> t1, t2, w; // integrates f(t1,t2) dt1 dt2 over the quadrant

    explicit SimplexRadialRule(int level) {
        RadialRule rad(level);
        GaussLegendre gl(level);
        t1.reserve(static_cast<std::size_t>(level) * level);
        t2.reserve(t1.capacity());
        w.reserve(t1.capacity());
        for (int i = 0; i < level; ++i) {
            double tau = rad.t[i], wt = rad.w[i];
            for (int j = 0; j < level; ++j) {
                double xi = 0.5 * (gl.x[j] + 1.0);
                double wx = 0.5 * gl.w[j];
                t1.push_back(tau * xi);
                t2.push_back(tau * (1.0 - xi));
                w.push_back(wt * wx * tau); // dt1 dt2 = tau dtau dxi
            }
        }
    }
};

// Uniform angles on [0, 2pi); the trapezoid rule there integrates e^{i l θ}
// exactly for |l| < count.
inline std::vector<double> uniform_angles(int count) {
    std::vector<double> th(count);
    for (int i = 0; i < count; ++i) th[i] = 2.0 * M_PI * i / count;
    return th;
}

} // namespace zlab
