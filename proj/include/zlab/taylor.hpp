#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "zlab/numerics.hpp"

namespace zlab {

// Truncated Taylor (jet) arithmetic in up to 8 variables.  A Taylor value
// holds the coefficients of a polynomial of total degree <= deg; products are
// truncated back to that degree.  We use the variables (z_1..z_n,
// zbar_1..zbar_n) treated as independent symbols, which is all that Wirtinger
// calculus needs.

using Expo = std::array<std::uint8_t, 8>;

class TaylorTables {
  public:
    TaylorTables(int nvars, int deg) : nvars_(nvars), deg_(deg) {
        Expo e{};
        enumerate(e, 0, 0);
        for (std::size_t i = 0; i < mono_.size(); ++i) index_[pack(mono_[i])] = static_cast<int>(i);
        std::size_t m = mono_.size();
        prod_.assign(m * m, -1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (degree_[i] + degree_[j] > deg_) continue;
                Expo s{};
                for (int v = 0; v < nvars_; ++v)
                    s[v] = static_cast<std::uint8_t>(mono_[i][v] + mono_[j][v]);
                prod_[i * m + j] = index_.at(pack(s));
            }
    }

    int nvars() const { return nvars_; }
    int deg() const { return deg_; }
    std::size_t size() const { return mono_.size(); }
    const Expo& monomial(std::size_t i) const { return mono_[i]; }
    int total_degree(std::size_t i) const { return degree_[i]; }
    int product_index(std::size_t i, std::size_t j) const { return prod_[i * mono_.size() + j]; }
    int find(const Expo& e) const {
        auto it = index_.find(pack(e));
        return it == index_.end() ? -1 : it->second;
    }

    static const TaylorTables& get(int nvars, int deg) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::unique_ptr<TaylorTables>> cache;
        std::lock_guard<std::mutex> lk(mu);
        auto key = std::make_pair(nvars, deg);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, std::make_unique<TaylorTables>(nvars, deg)).first;
        return *it->second;
    }

  private:
    void enumerate(Expo& e, int var, int used) {
        if (var == nvars_) {
            mono_.push_back(e);
            degree_.push_back(used);
            return;
        }
        for (int p = 0; p + used <= deg_; ++p) {
            e[var] = static_cast<std::uint8_t>(p);
            enumerate(e, var + 1, used + p);
        }
        e[var] = 0;
    }
    static std::uint64_t pack(const Expo& e) {
        std::uint64_t k = 0;
        for (int v = 0; v < 8; ++v) k = (k << 8) | e[v];
        return k;
    }

    int nvars_, deg_;
    std::vector<Expo> mono_;
    std::vector<int> degree_;
    std::vector<int> prod_;
    std::map<std::uint64_t, int> index_;
};

class Taylor {
  public:
    Taylor() : tab_(nullptr) {}
    explicit Taylor(const TaylorTables& tab) : tab_(&tab), c_(tab.size(), cplx(0.0)) {}

    static Taylor constant(const TaylorTables& tab, cplx v) {
        Taylor t(tab);
        t.c_[0] = v;
        return t;
    }

    const TaylorTables& tables() const { return *tab_; }
    cplx value() const { return c_[0]; }
    cplx& operator[](std::size_t i) { return c_[i]; }
    cplx operator[](std::size_t i) const { return c_[i]; }

    cplx coeff(const Expo& e) const {
        int i = tab_->find(e);
        return i < 0 ? cplx(0.0) : c_[i];
    }
    void set_coeff(const Expo& e, cplx v) {
        int i = tab_->find(e);
        if (i < 0) throw DomainError("Taylor::set_coeff: exponent outside table");
        c_[static_cast<std::size_t>(i)] = v;
    }

    Taylor& operator+=(const Taylor& o) {
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    Taylor& operator-=(const Taylor& o) {
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Taylor& operator*=(cplx s) {
        for (auto& x : c_) x *= s;
        return *this;
    }
    friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
    friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
    friend Taylor operator*(Taylor a, cplx s) { return a *= s; }
    friend Taylor operator*(cplx s, Taylor a) { return a *= s; }

    friend Taylor operator*(const Taylor& a, const Taylor& b) {
        Taylor r(*a.tab_);
        std::size_t m = a.c_.size();
        for (std::size_t i = 0; i < m; ++i) {
            if (a.c_[i] == cplx(0.0)) continue;
            cplx ai = a.c_[i];
            for (std::size_t j = 0; j < m; ++j) {
                int k = a.tab_->product_index(i, j);
                if (k < 0) continue;
                r.c_[static_cast<std::size_t>(k)] += ai * b.c_[j];
            }
        }
        return r;
    }

    // d/d(var): shifts coefficients down one order.
    Taylor derivative(int var) const {
        Taylor r(*tab_);
        for (std::size_t i = 0; i < c_.size(); ++i) {
            const Expo& e = tab_->monomial(i);
            if (e[var] == 0) continue;
            Expo d = e;
            d[var] = static_cast<std::uint8_t>(d[var] - 1);
            int k = tab_->find(d);
            r.c_[static_cast<std::size_t>(k)] += c_[i] * static_cast<double>(e[var]);
        }
        return r;
    }

    Taylor reciprocal() const {
        cplx c0 = c_[0];
        if (std::abs(c0) == 0.0) throw DomainError("Taylor::reciprocal: zero constant term");
        Taylor u = *this;
        u *= 1.0 / c0;
        u.c_[0] = 0.0;
        Taylor acc = Taylor::constant(*tab_, 1.0);
        Taylor term = Taylor::constant(*tab_, 1.0);
        double sign = 1.0;
        for (int m = 1; m <= tab_->deg(); ++m) {
            term = term * u;
            sign = -sign;
            Taylor t = term;
            t *= sign;
            acc += t;
        }
        acc *= 1.0 / c0;
        return acc;
    }

    Taylor log() const {
        cplx c0 = c_[0];
        if (std::abs(c0) == 0.0) throw DomainError("Taylor::log: zero constant term");
        Taylor u = *this;
        u *= 1.0 / c0;
        u.c_[0] = 0.0;
        Taylor acc = Taylor::constant(*tab_, std::log(c0));
        Taylor term = Taylor::constant(*tab_, 1.0);
        double sign = -1.0;
        for (int m = 1; m <= tab_->deg(); ++m) {
            term = term * u;
            sign = -sign;
            Taylor t = term;
            t *= sign / m;
            acc += t;
        }
        return acc;
    }

  private:
    const TaylorTables* tab_;
    std::vector<cplx> c_;
};

} // namespace zlab
