#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include <boost/rational.hpp>

#include "zlab/curvature.hpp"

namespace zlab {

using Rat = boost::rational<long long>;

// Polynomial in the Chern-character components: each term is a multiset of
// degrees (k1 >= k2 >= ...) standing for ch_{k1} ch_{k2} ... with an exact
// rational coefficient.  All terms of one polynomial share the same total
// degree.
struct CharPoly {
    std::vector<std::pair<std::vector<int>, Rat>> terms;

    int degree() const {
        if (terms.empty()) return 0;
        int d = 0;
        for (int k : terms.front().first) d += k;
        return d;
    }

    void normalize() {
        for (auto& [mono, c] : terms) std::sort(mono.begin(), mono.end(), std::greater<int>());
        std::map<std::vector<int>, Rat> acc;
        for (auto& [mono, c] : terms) acc[mono] += c;
        terms.clear();
        int deg = -1;
        for (auto& [mono, c] : acc) {
            if (c == Rat(0)) continue;
            int d = 0;
            for (int k : mono) d += k;
            if (deg < 0) deg = d;
            if (d != deg) throw DomainError("CharPoly: mixed total degree");
            terms.emplace_back(mono, c);
        }
    }

    Rat coeff(std::vector<int> mono) const {
        std::sort(mono.begin(), mono.end(), std::greater<int>());
        for (const auto& [m, c] : terms)
            if (m == mono) return c;
        return Rat(0);
    }

    static CharPoly one() { return CharPoly{{{std::vector<int>{}, Rat(1)}}}; }
    static CharPoly ch(int k, Rat c = Rat(1)) { return CharPoly{{{std::vector<int>{k}, c}}}; }

    friend CharPoly operator*(const CharPoly& a, const CharPoly& b) {
        CharPoly r;
        for (const auto& [ma, ca] : a.terms)
            for (const auto& [mb, cb] : b.terms) {
                std::vector<int> m = ma;
                m.insert(m.end(), mb.begin(), mb.end());
                r.terms.emplace_back(std::move(m), ca * cb);
            }
        r.normalize();
        return r;
    }
    friend CharPoly operator+(const CharPoly& a, const CharPoly& b) {
        CharPoly r = a;
        r.terms.insert(r.terms.end(), b.terms.begin(), b.terms.end());
        r.normalize();
        return r;
    }
    friend CharPoly operator*(Rat c, const CharPoly& a) {
        CharPoly r = a;
        for (auto& [m, x] : r.terms) x *= c;
        r.normalize();
        return r;
    }
};

// Td_j expanded over Chern-character monomials, via the Newton conversion
// from the elementary Chern classes (p_k = k! ch_k are the power sums):
//   Td_0 = 1, Td_1 = c_1/2, Td_2 = (c_1^2 + c_2)/12, Td_3 = c_1 c_2 / 24.
inline CharPoly todd_in_chern_characters(int j) {
    if (j < 0 || j > 3) throw DomainError("todd_in_chern_characters: j must be 0..3");
    CharPoly p1 = CharPoly::ch(1);
    CharPoly p2 = CharPoly::ch(2, Rat(2));
    CharPoly e1 = p1;
    CharPoly e2 = Rat(1, 2) * (p1 * p1 + Rat(-1) * p2);
    switch (j) {
        case 0:
            return CharPoly::one();
        case 1:
            return Rat(1, 2) * e1;
        case 2:
            return Rat(1, 12) * (e1 * e1 + e2);
        default:
            return Rat(1, 24) * (e1 * e2);
    }
}

// ---------------------------------------------------------------------------
// Pointwise densities of the degree-(2j) characteristic monomials against
// omega: ratio(alpha) := alpha wedge omega^{n-j} / omega^n.  Only the
// monomials appearing through Td_2 have closed forms here.

struct CurvatureScalars {
    double S, R2, ric2, dS;
    int n;
};

inline CurvatureScalars curvature_scalars(const KahlerModel& model, std::size_t node,
                                          bool need_dS) {
    CurvatureData c = curvature_at(model, node);
    CurvatureScalars out{c.scalar, c.norm_R_sq, c.norm_ric_sq, 0.0, c.n};
    if (need_dS) out.dS = delta_scalar(model, node);
    return out;
}

inline double monomial_form_ratio(const CurvatureScalars& cs, const std::vector<int>& mono) {
    const int n = cs.n;
    if (mono.empty()) return 1.0;
    if (mono == std::vector<int>{1}) return cs.S / n; // ric wedge omega^{n-1} / omega^n
    if (mono == std::vector<int>{2}) {
        if (n < 2) throw DegenerateInputError("ch_2 ratio needs n >= 2");
        return (cs.ric2 - cs.R2) / (2.0 * n * (n - 1));
    }
    if (mono == std::vector<int>{1, 1}) {
        if (n < 2) throw DegenerateInputError("c_1^2 ratio needs n >= 2");
        return (cs.S * cs.S - cs.ric2) / (static_cast<double>(n) * (n - 1));
    }
    throw DomainError("no closed form for this characteristic monomial");
}

// t~_j = Td_j(TM) omega^{n-j} / omega^n.
inline double t_tilde(const KahlerModel& model, std::size_t node, int j) {
    const int n = model.dim();
    if (j < 0 || j > 2) throw DomainError("t_tilde: closed forms implemented for j <= 2");
    if (j > n) throw DegenerateInputError("t_tilde: j exceeds the dimension");
    if (j == 0) return 1.0;
    CurvatureScalars cs = curvature_scalars(model, node, false);
    double acc = 0.0;
    for (const auto& [mono, c] : todd_in_chern_characters(j).terms)
        acc += boost::rational_cast<double>(c) * monomial_form_ratio(cs, mono);
    return acc;
}

// The endomorphism fields appearing in the variation of the Bott-Chern term:
// for a monomial ch_{k_1}...ch_{k_r} of total degree j and a slot m,
//   ell^k_m = [ch_{k_1}(R) ... (iR)^{k_m - 1}/(k_m-1)! ... ch_{k_r}(R)] wedge
//             omega^{n+1-j} / ((n+1-j) omega^n)
// which for j <= 2 reduces to the three cases handled here.
inline std::vector<EndoField> ell_monomial_endos(const KahlerModel& model,
                                                 const std::vector<int>& mono) {
    const int n = model.dim();
    if (mono == std::vector<int>{1}) {
        auto id = identity_endo(model);
        return {[id, n](std::size_t i) { return Eigen::Matrix3cd(id(i) / double(n)); }};
    }
    if (mono == std::vector<int>{2}) {
        if (n < 2) throw DegenerateInputError("ell for ch_2 needs n >= 2");
        auto ric = ricci_endo(model);
        double den = static_cast<double>(n) * (n - 1);
        return {[ric, den](std::size_t i) { return Eigen::Matrix3cd(ric(i) / den); }};
    }
    if (mono == std::vector<int>{1, 1}) {
        if (n < 2) throw DegenerateInputError("ell for c_1^2 needs n >= 2");
        auto sid = scalar_times_identity_endo(model);
        double den = static_cast<double>(n) * (n - 1);
        EndoField e = [sid, den](std::size_t i) { return Eigen::Matrix3cd(sid(i) / den); };
        return {e, e};
    }
    throw DomainError("no endomorphism list for this characteristic monomial");
}

// int f ell~_j omega^n, realized weakly: the formal adjoints are never formed
// pointwise; each term pairs the Hessian of f against the endomorphism.
inline double ell_tilde_weak(const KahlerModel& model, int j, const FieldFn& f) {
    if (j < 0 || j > 2) throw DomainError("ell_tilde_weak: implemented for j <= 2");
    if (j == 0) return 0.0;
    KahanSum acc;
    for (const auto& [mono, c] : todd_in_chern_characters(j).terms)
        for (const auto& endo : ell_monomial_endos(model, mono))
            acc.add(-boost::rational_cast<double>(c) *
                    hessian_pairing(model, f, endo).real());
    return acc.value();
}

// Full (strong-form) density of one characteristic monomial, t~ part plus the
// closed-form adjoint part; only used where the closed form is known.
inline double monomial_density(const KahlerModel& model, std::size_t node,
                               const std::vector<int>& mono) {
    const int n = model.dim();
    CurvatureScalars cs = curvature_scalars(model, node, true);
    if (mono == std::vector<int>{2})
        return (1.0 / (n * (n - 1.0))) * (-cs.dS - 0.5 * cs.R2 + 0.5 * cs.ric2);
    if (mono == std::vector<int>{1, 1})
        return (1.0 / (n * (n - 1.0))) * (-2.0 * cs.dS + cs.S * cs.S - cs.ric2);
    throw DomainError("no closed-form density for this monomial");
}

// Z~_j:  Z~_0 = 1,  n Z~_1 = S/2,
//        n(n-1) Z~_2 = -(1/6) Delta S + (1/24)(|R|^2 - 4|ric|^2 + 3 S^2).
inline double z_density(const KahlerModel& model, std::size_t node, int j) {
    const int n = model.dim();
    if (j < 0 || j > 2) throw DomainError("z_density: j must be 0, 1 or 2");
    if (j == 2 && n < 2)
        throw DegenerateInputError("z_density: the j = 2 density is undefined on a curve");
    if (j == 0) return 1.0;
    if (j == 1) return curvature_scalars(model, node, false).S / (2.0 * n);
    CurvatureScalars cs = curvature_scalars(model, node, true);
    return (1.0 / (n * (n - 1.0))) *
           (-cs.dS / 6.0 + (cs.R2 - 4.0 * cs.ric2 + 3.0 * cs.S * cs.S) / 24.0);
}

inline ScalarField z_density_field(const KahlerModel& model, int j) {
    ScalarField out;
    out.model = &model;
    out.values.resize(static_cast<Eigen::Index>(model.nodes().size()));
    parallel_for(model.nodes().size(), [&](std::size_t i) {
        out.values[static_cast<Eigen::Index>(i)] = z_density(model, i, j);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Topological values int Td_j(M) [omega]^{n-j} for the supported models.

inline double chern_topological_value(const KahlerModel& model, int j) {
    const auto& fs = model.factors();
    auto is_cp1 = [&](std::size_t i) { return fs[i].n == 1; };
    if (!model.quantizable())
        throw DomainError("topological table needs an integral polarization");
    if (fs.size() == 1 && fs[0].n == 1) {
        double d = fs[0].degree;
        if (j == 0) return d;
        if (j == 1) return 1.0;
    } else if (fs.size() == 1 && fs[0].n == 2) {
        double d = fs[0].degree;
        if (j == 0) return d * d;
        if (j == 1) return 1.5 * d;
        if (j == 2) return 1.0;
    } else if (fs.size() == 2 && is_cp1(0) && is_cp1(1)) {
        double d1 = fs[0].degree, d2 = fs[1].degree;
        if (j == 0) return 2.0 * d1 * d2;
        if (j == 1) return d1 + d2;
        if (j == 2) return 1.0;
    } else {
        throw DomainError("topological table supports CP1, CP2 and CP1xCP1 only");
    }
    throw DomainError("topological table: j out of range for this model");
}

struct DensityReport {
    int j = 0;
    ScalarField t_part;   // t~_j at the nodes
    ScalarField ell_part; // closed-form adjoint contribution (zero for j <= 1)
    ScalarField z;        // Z~_j
    double integral = 0.0;          // int Z~_j omega^n (quadrature)
    double topological_value = 0.0; // int Td_j [omega]^{n-j}
};

inline DensityReport z_integral_check(const KahlerModel& model, int j) {
    const int n = model.dim();
    DensityReport rep;
    rep.j = j;
    rep.z = z_density_field(model, j);
    rep.t_part.model = &model;
    rep.ell_part.model = &model;
    rep.t_part.values.resize(rep.z.values.size());
    rep.ell_part.values.resize(rep.z.values.size());
    parallel_for(model.nodes().size(), [&](std::size_t i) {
        double t = t_tilde(model, i, j);
        rep.t_part.values[static_cast<Eigen::Index>(i)] = t;
        rep.ell_part.values[static_cast<Eigen::Index>(i)] =
            rep.z.values[static_cast<Eigen::Index>(i)].real() - t;
    });
    double nfact = 1.0;
    for (int i = 2; i <= n; ++i) nfact *= i;
    rep.integral = integrate_real(model, rep.z) * nfact;
    rep.topological_value = chern_topological_value(model, j);
    return rep;
}

} // namespace zlab
