#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "zlab/numerics.hpp"

namespace zlab {

constexpr int kMaxJetOrder = 6;

// Multi-index over at most 3 complex coordinates.
using MIdx = std::array<int, 3>;

inline int midx_total(const MIdx& a) { return a[0] + a[1] + a[2]; }

// ---------------------------------------------------------------------------
// Torus-invariant functions of t_i = |z_i|^2 with exact mixed t-partials.
// These carry the whole 6th-order jet supply for the built-in model families.

class ToricFunction;
using ToricPtr = std::shared_ptr<const ToricFunction>;

class ToricFunction {
  public:
    virtual ~ToricFunction() = default;
    virtual int vars() const = 0;
    // Mixed partial d^gamma/dt^gamma, gamma componentwise; gamma = 0 gives the value.
    virtual double t_derivative(const MIdx& gamma, const double* t) const = 0;

    // The same function written in the affine chart obtained by inverting
    // coordinate `coord` of its factor (t_c -> 1/t_c, sibling t_i -> t_i/t_c
    // for i in `siblings`).  Kahler potentials may change by a pluriharmonic
    // term, which every consumer of jets ignores.  Throws when the function
    // has no closed-form counterpart in the other chart.
    virtual ToricPtr chart_swapped(int /*coord*/, const std::vector<int>& /*siblings*/) const {
        throw DomainError("chart swap not available for this potential");
    }
};

// scale * log(1 + sum t_i): the Fubini-Study potential of an n-dim factor.
class FubiniStudyPotential final : public ToricFunction {
  public:
    FubiniStudyPotential(int nvars, double scale) : nv_(nvars), scale_(scale) {}
    int vars() const override { return nv_; }
    double t_derivative(const MIdx& g, const double* t) const override {
        double sigma = 1.0;
        for (int i = 0; i < nv_; ++i) sigma += t[i];
        int m = midx_total(g);
        if (m == 0) return scale_ * std::log(sigma);
        double fact = 1.0;
        for (int i = 1; i < m; ++i) fact *= i;
        double sgn = (m % 2 == 0) ? -1.0 : 1.0;
        return scale_ * sgn * fact * std::pow(sigma, -m);
    }

    // log sigma = log sigma' - log tau_c: pluriharmonic shift only.
    ToricPtr chart_swapped(int, const std::vector<int>&) const override {
        return std::make_shared<FubiniStudyPotential>(nv_, scale_);
    }

  private:
    int nv_;
    double scale_;
};

// coef * prod_{i in S} t_i^{a_i} * (1 + sum_{i in S} t_i)^{-m}.  With
// m >= |a| these extend smoothly across the divisor at infinity, so they are
// legitimate global functions on the projective factor (they are monomials in
// the moment coordinates mu_i = t_i / sigma when m == |a|).
class RationalMonomial final : public ToricFunction {
  public:
    RationalMonomial(int nvars, std::vector<int> coords, std::vector<int> exps, int m,
                     double coef = 1.0)
        : nv_(nvars), coords_(std::move(coords)), exps_(std::move(exps)), m_(m), coef_(coef) {}

    int vars() const override { return nv_; }

    double t_derivative(const MIdx& g, const double* t) const override {
        for (int v = 0; v < nv_; ++v) {
            if (g[v] == 0) continue;
            bool in = false;
            for (int c : coords_)
                if (c == v) in = true;
            if (!in) return 0.0;
        }
        double sigma = 1.0;
        for (int c : coords_) sigma += t[c];
        // Leibniz over [prod t^a] * [sigma^-m]; delta ranges over sub-indices
        // of gamma restricted to our coordinates.
        std::vector<int> gl(coords_.size());
        for (std::size_t i = 0; i < coords_.size(); ++i) gl[i] = g[coords_[i]];
        double total = 0.0;
        std::vector<int> delta(coords_.size(), 0);
        for (;;) {
            double term = coef_;
            int rest = 0;
            for (std::size_t i = 0; i < coords_.size(); ++i) {
                int a = exps_[i], d = delta[i];
                if (d > a) {
                    term = 0.0;
                    break;
                }
                double fall = 1.0;
                for (int q = 0; q < d; ++q) fall *= (a - q);
                term *= binom(gl[i], d) * fall * std::pow(t[coords_[i]], a - d);
                rest += gl[i] - d;
            }
            if (term != 0.0) {
                double rising = 1.0;
                for (int q = 0; q < rest; ++q) rising *= (m_ + q);
                double sgn = (rest % 2 == 0) ? 1.0 : -1.0;
                term *= sgn * rising * std::pow(sigma, -(m_ + rest));
                total += term;
            }
            std::size_t v = 0;
            while (v < delta.size()) {
                if (delta[v] < gl[v]) {
                    ++delta[v];
                    break;
                }
                delta[v] = 0;
                ++v;
            }
            if (v == delta.size()) break;
        }
        return total;
    }

    // t^a sigma^{-m} with c in the subset maps to the same shape with the
    // exponent on t_c replaced by m - |a| (requires m >= |a|).
    ToricPtr chart_swapped(int coord, const std::vector<int>& siblings) const override {
        bool in_subset = false;
        for (int c : coords_)
            if (c == coord) in_subset = true;
        if (!in_subset) {
            // fine only if we are disjoint from the whole swapped factor
            for (int s : siblings)
                for (int c : coords_)
                    if (c == s)
                        throw DomainError("chart swap: monomial straddles the swapped factor");
            return std::make_shared<RationalMonomial>(nv_, coords_, exps_, m_, coef_);
        }
        int total = 0;
        for (int e : exps_) total += e;
        if (m_ < total) throw DomainError("chart swap: monomial is not smooth at infinity");
        std::vector<int> exps = exps_;
        for (std::size_t i = 0; i < coords_.size(); ++i)
            if (coords_[i] == coord) exps[i] = m_ - total;
        return std::make_shared<RationalMonomial>(nv_, coords_, exps, m_, coef_);
    }

  private:
    static double binom(int n, int k) {
        double r = 1.0;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    }
    int nv_;
    std::vector<int> coords_;
    std::vector<int> exps_;
    int m_;
    double coef_;
};

class ToricSum final : public ToricFunction {
  public:
    ToricSum(int nvars, std::vector<std::pair<double, ToricPtr>> terms)
        : nv_(nvars), terms_(std::move(terms)) {}
    int vars() const override { return nv_; }
    double t_derivative(const MIdx& g, const double* t) const override {
        KahanSum s;
        for (const auto& [c, f] : terms_) s.add(c * f->t_derivative(g, t));
        return s.value();
    }
    ToricPtr chart_swapped(int coord, const std::vector<int>& siblings) const override {
        std::vector<std::pair<double, ToricPtr>> terms;
        for (const auto& [c, f] : terms_) terms.emplace_back(c, f->chart_swapped(coord, siblings));
        return std::make_shared<ToricSum>(nv_, std::move(terms));
    }

  private:
    int nv_;
    std::vector<std::pair<double, ToricPtr>> terms_;
};

// Product of two invariant functions living on disjoint coordinate subsets
// (used for bump bases on product models); partials factorize.
class DisjointProduct final : public ToricFunction {
  public:
    DisjointProduct(int nvars, ToricPtr a, ToricPtr b, int offset_b)
        : nv_(nvars), a_(std::move(a)), b_(std::move(b)), off_(offset_b) {}
    int vars() const override { return nv_; }
    double t_derivative(const MIdx& g, const double* t) const override {
        MIdx ga{0, 0, 0}, gb{0, 0, 0};
        for (int v = 0; v < a_->vars(); ++v) ga[v] = g[v];
        for (int v = 0; v < b_->vars(); ++v) gb[v] = g[off_ + v];
        return a_->t_derivative(ga, t) * b_->t_derivative(gb, t + off_);
    }
    ToricPtr chart_swapped(int coord, const std::vector<int>& siblings) const override {
        std::vector<int> local;
        if (coord < off_) {
            for (int s : siblings)
                if (s < off_) local.push_back(s);
            return std::make_shared<DisjointProduct>(nv_, a_->chart_swapped(coord, local), b_,
                                                     off_);
        }
        for (int s : siblings)
            if (s >= off_) local.push_back(s - off_);
        return std::make_shared<DisjointProduct>(
            nv_, a_, b_->chart_swapped(coord - off_, local), off_);
    }

  private:
    int nv_;
    ToricPtr a_, b_;
    int off_;
};

// One-variable profile supplied as a plain callable; t-derivatives by central
// differences (step 1e-2 per order) with one Richardson refinement.  The
// profile must be evaluable a little below t = 0.
class FiniteDifferenceProfile final : public ToricFunction {
  public:
    explicit FiniteDifferenceProfile(std::function<double(double)> u, double h = 1e-2)
        : u_(std::move(u)), h_(h) {}
    int vars() const override { return 1; }
    double t_derivative(const MIdx& g, const double* t) const override {
        int m = g[0];
        if (m == 0) return u_(t[0]);
        double dh = stencil(m, t[0], h_);
        double dh2 = stencil(m, t[0], h_ / 2.0);
        return (4.0 * dh2 - dh) / 3.0; // one Richardson step on the O(h^2) stencil
    }

  private:
    double stencil(int m, double t, double h) const {
        // symmetric m-th difference, offsets m/2 - i
        double acc = 0.0, sign = 1.0;
        for (int i = 0; i <= m; ++i) {
            double c = 1.0;
            for (int q = 1; q <= i; ++q) c = c * (m - q + 1) / q;
            acc += sign * c * u_(t + (0.5 * m - i) * h);
            sign = -sign;
        }
        return acc / std::pow(h, m);
    }
    std::function<double(double)> u_;
    double h_;
};

// ---------------------------------------------------------------------------
// Chain-rule tables: for F(t), t = z zbar,
//   d_z^a d_zbar^b F = sum_m  C[a][b][m] F^{(m)}(t) z^{m-a} zbar^{m-b},
// with max(a,b) <= m <= a+b.  The coefficients satisfy
//   C[a][b+1][m] = C[a][b][m-1] + (m-b) C[a][b][m]   (and symmetrically in a).

class ChainTable {
  public:
    static const ChainTable& get() {
        static ChainTable t;
        return t;
    }
    double coef(int a, int b, int m) const { return c_[a][b][m]; }

  private:
    ChainTable() {
        for (auto& p : c_)
            for (auto& q : p) q.fill(0.0);
        c_[0][0][0] = 1.0;
        for (int a = 0; a <= kMaxJetOrder; ++a)
            for (int b = 0; b <= kMaxJetOrder; ++b) {
                if (a == 0 && b == 0) continue;
                for (int m = 0; m <= a + b; ++m) {
                    if (b > 0) {
                        double v = 0.0;
                        if (m >= 1) v += c_[a][b - 1][m - 1];
                        v += (m - (b - 1)) * c_[a][b - 1][m];
                        c_[a][b][m] = v;
                    } else {
                        double v = 0.0;
                        if (m >= 1) v += c_[a - 1][0][m - 1];
                        v += (m - (a - 1)) * c_[a - 1][0][m];
                        c_[a][b][m] = v;
                    }
                }
            }
    }
    std::array<std::array<std::array<double, 2 * kMaxJetOrder + 1>, kMaxJetOrder + 1>,
               kMaxJetOrder + 1>
        c_;
};

} // namespace zlab
