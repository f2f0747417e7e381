#pragma once

#include <string>

#include "zlab/manifold.hpp"

namespace zlab {

// (1 + t/tau)^{-m}; the pole sits at t = -tau, i.e. strictly outside the
// mapped integration interval, which makes quadrature error visible but
// controlled -- used to probe convergence rates.
class StretchedReciprocal final : public ToricFunction {
  public:
    StretchedReciprocal(double tau, int m) : tau_(tau), m_(m) {}
    int vars() const override { return 1; }
    double t_derivative(const MIdx& g, const double* t) const override {
        int q = g[0];
        double base = 1.0 + t[0] / tau_;
        double rising = 1.0;
        for (int i = 0; i < q; ++i) rising *= (m_ + i);
        double sgn = (q % 2 == 0) ? 1.0 : -1.0;
        return sgn * rising * std::pow(tau_, -q) * std::pow(base, -(m_ + q));
    }

  private:
    double tau_;
    int m_;
};

class ToricConstant final : public ToricFunction {
  public:
    ToricConstant(int nvars, double c) : nv_(nvars), c_(c) {}
    int vars() const override { return nv_; }
    double t_derivative(const MIdx& g, const double*) const override {
        return midx_total(g) == 0 ? c_ : 0.0;
    }
    ToricPtr chart_swapped(int, const std::vector<int>&) const override {
        return std::make_shared<ToricConstant>(nv_, c_);
    }

  private:
    int nv_;
    double c_;
};

inline ToricPtr toric_constant(int nvars, double c) {
    return std::make_shared<ToricConstant>(nvars, c);
}

// (1-t)/(1+t) = 2/(1+t) - 1: the first spherical harmonic on the round
// sphere (eigenvalue -2 of the complex Laplacian at scale 1); its Hamiltonian
// flow is the rotation field.
inline ToricPtr cp1_height() {
    auto inv = std::make_shared<RationalMonomial>(1, std::vector<int>{0}, std::vector<int>{0}, 1);
    return std::make_shared<ToricSum>(
        1, std::vector<std::pair<double, ToricPtr>>{{2.0, inv}, {-1.0, toric_constant(1, 1.0)}});
}

// mu = t/(1+t): the moment coordinate; generates the same rotation as the
// height up to sign and constant.
inline ToricPtr cp1_moment() {
    return std::make_shared<RationalMonomial>(1, std::vector<int>{0}, std::vector<int>{1}, 1);
}

inline ToricPtr cp1_bump(int m) {
    return std::make_shared<RationalMonomial>(1, std::vector<int>{0}, std::vector<int>{1}, m);
}

// Lift a one-variable invariant function onto coordinate `coord` of an
// n-dimensional model.
inline ToricPtr lift_to(int nvars, ToricPtr f, int coord) {
    if (nvars == f->vars() && coord == 0) return f;
    return std::make_shared<detail::ShiftedToric>(nvars, std::move(f), coord);
}

inline FieldFn field_sum(std::vector<std::pair<double, FieldFn>> terms) {
    return [terms](const Node& nd) {
        FieldJets acc;
        for (const auto& [c, f] : terms) {
            FieldJets v = f(nd);
            acc.f += c * v.f;
            for (int i = 0; i < 3; ++i) {
                acc.df[i] += c * v.df[i];
                for (int j = 0; j < 3; ++j) acc.ddf[i][j] += c * v.ddf[i][j];
            }
        }
        return acc;
    };
}

// Named presets used by the CLI and the test batteries.
inline FieldFn named_field(const std::string& name, int nvars) {
    if (name == "height") return field_from_toric(lift_to(nvars, cp1_height(), 0));
    if (name == "moment") return field_from_toric(lift_to(nvars, cp1_moment(), 0));
    if (name == "bump2") return field_from_toric(lift_to(nvars, cp1_bump(2), 0));
    if (name == "bump3") return field_from_toric(lift_to(nvars, cp1_bump(3), 0));
    if (name == "pole146")
        return field_from_toric(lift_to(nvars, std::make_shared<StretchedReciprocal>(146.0, 1), 0));
    if (name == "angular1")
        return field_angular(0, 1, cp1_bump(2));
    if (name == "angular2")
        return field_angular(0, 2, std::make_shared<RationalMonomial>(
                                       1, std::vector<int>{0}, std::vector<int>{1}, 3));
    if (nvars >= 2) {
        if (name == "mu1")
            return field_from_toric(std::make_shared<RationalMonomial>(
                nvars, std::vector<int>{0, 1}, std::vector<int>{1, 0}, 1));
        if (name == "mu2")
            return field_from_toric(std::make_shared<RationalMonomial>(
                nvars, std::vector<int>{0, 1}, std::vector<int>{0, 1}, 1));
        if (name == "mu11")
            return field_from_toric(std::make_shared<RationalMonomial>(
                nvars, std::vector<int>{0, 1}, std::vector<int>{1, 1}, 2));
        if (name == "mu_diff")
            return field_sum({{1.0, named_field("mu1", nvars)}, {-1.0, named_field("mu2", nvars)}});
        if (name == "mu_sq")
            return field_from_toric(std::make_shared<RationalMonomial>(
                nvars, std::vector<int>{0, 1}, std::vector<int>{2, 0}, 2));
    }
    throw ConfigError("unknown field preset '" + name + "'");
}

inline ToricPtr named_bump(const std::string& name, int nvars) {
    if (name == "height") return lift_to(nvars, cp1_height(), 0);
    if (name == "moment") return lift_to(nvars, cp1_moment(), 0);
    if (name == "bump2") return lift_to(nvars, cp1_bump(2), 0);
    if (name == "bump3") return lift_to(nvars, cp1_bump(3), 0);
    if (nvars >= 2) {
        if (name == "mu1")
            return std::make_shared<RationalMonomial>(nvars, std::vector<int>{0, 1},
                                                      std::vector<int>{1, 0}, 1);
        if (name == "mu11")
            return std::make_shared<RationalMonomial>(nvars, std::vector<int>{0, 1},
                                                      std::vector<int>{1, 1}, 2);
        if (name == "mu_sq")
            return std::make_shared<RationalMonomial>(nvars, std::vector<int>{0, 1},
                                                      std::vector<int>{2, 0}, 2);
    }
    throw ConfigError("unknown bump preset '" + name + "'");
}

} // namespace zlab
