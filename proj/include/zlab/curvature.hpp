#pragma once

#include <array>
#include <functional>

#include <Eigen/Dense>

#include "zlab/manifold.hpp"
#include "zlab/taylor.hpp"

namespace zlab {

// Pointwise curvature of the Kahler metric g_{i jbar} = d_i dbar_j phi, in
// the convention
//   R_{i jbar k lbar} = -d_k dbar_l g_{i jbar} + g^{qbar p} d_k g_{i qbar} dbar_l g_{p jbar},
//   ric_{i jbar} = g^{lbar k} R_{k lbar i jbar},   S = g^{jbar i} ric_{i jbar}.
// Fubini-Study with potential s*log(1+|z|^2) then has ric = ((n+1)/s) g and
// S = n(n+1)/s.
struct CurvatureData {
    int n = 1;
    Eigen::Matrix3cd g = Eigen::Matrix3cd::Zero();
    Eigen::Matrix3cd ginv = Eigen::Matrix3cd::Zero();
    Eigen::Matrix3cd ricci = Eigen::Matrix3cd::Zero();
    std::array<cplx, 81> riemann{};
    double scalar = 0.0;
    double norm_R_sq = 0.0;
    double norm_ric_sq = 0.0;

    cplx& R(int i, int j, int k, int l) { return riemann[((i * 3 + j) * 3 + k) * 3 + l]; }
    cplx R(int i, int j, int k, int l) const { return riemann[((i * 3 + j) * 3 + k) * 3 + l]; }
};

inline CurvatureData curvature_at(const KahlerModel& model, std::size_t node) {
    const int n = model.dim();
    JetTable jt = model.jets(node, 4);
    CurvatureData c;
    c.n = n;
    c.g = model.metric(node).g;
    c.ginv = model.metric(node).ginv;

    // dg[k][i][q] = d_k g_{i qbar},  dgb[l][p][j] = dbar_l g_{p jbar}
    cplx dg[3][3][3];
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int q = 0; q < n; ++q) {
                MIdx a{0, 0, 0}, b{0, 0, 0};
                a[i] += 1;
                a[k] += 1;
                b[q] += 1;
                dg[k][i][q] = jt.j(a, b);
            }

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    MIdx a{0, 0, 0}, b{0, 0, 0};
                    a[i] += 1;
                    a[k] += 1;
                    b[j] += 1;
                    b[l] += 1;
                    cplx v = -jt.j(a, b);
                    for (int p = 0; p < n; ++p)
                        for (int q = 0; q < n; ++q)
                            v += c.ginv(q, p) * dg[k][i][q] * std::conj(dg[l][j][p]);
                    c.R(i, j, k, l) = v;
                }

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx v = 0.0;
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) v += c.ginv(l, k) * c.R(k, l, i, j);
            c.ricci(i, j) = v;
        }

    c.scalar = (c.ginv.topLeftCorner(n, n) * c.ricci.topLeftCorner(n, n)).trace().real();
    c.norm_ric_sq = (c.ginv.topLeftCorner(n, n) * c.ricci.topLeftCorner(n, n) *
                     c.ginv.topLeftCorner(n, n) * c.ricci.topLeftCorner(n, n))
                        .trace()
                        .real();

    // |R|^2: raise all four indices against the conjugate tensor.
    std::array<cplx, 81> t = c.riemann, u{};
    auto idx = [](int i, int j, int k, int l) { return ((i * 3 + j) * 3 + k) * 3 + l; };
    // index 1: T[i][j][k][l] = sum_p Ginv(i,p) R[p][j][k][l]
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    cplx v = 0.0;
                    for (int p = 0; p < n; ++p) v += c.ginv(i, p) * t[idx(p, j, k, l)];
                    u[idx(i, j, k, l)] = v;
                }
    t = u;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    cplx v = 0.0;
                    for (int q = 0; q < n; ++q) v += c.ginv(q, j) * t[idx(i, q, k, l)];
                    u[idx(i, j, k, l)] = v;
                }
    t = u;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    cplx v = 0.0;
                    for (int r = 0; r < n; ++r) v += c.ginv(k, r) * t[idx(i, j, r, l)];
                    u[idx(i, j, k, l)] = v;
                }
    t = u;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    cplx v = 0.0;
                    for (int s = 0; s < n; ++s) v += c.ginv(s, l) * t[idx(i, j, k, s)];
                    u[idx(i, j, k, l)] = v;
                }
    KahanSum nr;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    nr.add((c.R(i, j, k, l) * std::conj(u[idx(i, j, k, l)])).real());
    c.norm_R_sq = nr.value();
    return c;
}

inline ScalarField scalar_curvature_field(const KahlerModel& model) {
    ScalarField out;
    out.model = &model;
    out.values.resize(static_cast<Eigen::Index>(model.nodes().size()));
    parallel_for(model.nodes().size(), [&](std::size_t i) {
        out.values[static_cast<Eigen::Index>(i)] = curvature_at(model, i).scalar;
    });
    return out;
}

// Delta f = g^{kbar j} d_j dbar_k f  (the complex Laplacian; on the round
// degree-1 sphere the first harmonic (1-t)/(1+t) has eigenvalue -2).
inline cplx laplacian_at(const KahlerModel& model, std::size_t node, const FieldJets& fj) {
    const int n = model.dim();
    const auto& ginv = model.metric(node).ginv;
    cplx v = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v += ginv(i, j) * fj.ddf[j][i];
    return v;
}

inline ScalarField laplacian(const KahlerModel& model, const FieldFn& f) {
    ScalarField out;
    out.model = &model;
    out.values.resize(static_cast<Eigen::Index>(model.nodes().size()));
    parallel_for(model.nodes().size(), [&](std::size_t i) {
        out.values[static_cast<Eigen::Index>(i)] = laplacian_at(model, i, f(model.nodes()[i]));
    });
    return out;
}

// ---------------------------------------------------------------------------
// Laplacian of the scalar curvature through order-2 jet arithmetic: the whole
// metric -> log det -> Ricci -> S pipeline is evaluated in truncated Taylor
// series around the node, which consumes exactly the 6th-order potential jets.

namespace detail {

inline Taylor taylor_det(const std::vector<std::vector<Taylor>>& M, int n) {
    if (n == 1) return M[0][0];
    if (n == 2) return M[0][0] * M[1][1] - M[0][1] * M[1][0];
    Taylor d = M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]);
    d -= M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]);
    d += M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
    return d;
}

inline std::vector<std::vector<Taylor>> taylor_inverse(const std::vector<std::vector<Taylor>>& M,
                                                       int n, const TaylorTables& tab) {
    Taylor det = taylor_det(M, n);
    Taylor dinv = det.reciprocal();
    std::vector<std::vector<Taylor>> inv(n, std::vector<Taylor>(n, Taylor(tab)));
    if (n == 1) {
        inv[0][0] = dinv;
        return inv;
    }
    if (n == 2) {
        inv[0][0] = M[1][1] * dinv;
        inv[1][1] = M[0][0] * dinv;
        inv[0][1] = M[0][1] * (-1.0) * dinv;
        inv[1][0] = M[1][0] * (-1.0) * dinv;
        return inv;
    }
    auto cof = [&](int r, int c) {
        int r0 = (r + 1) % 3, r1 = (r + 2) % 3, c0 = (c + 1) % 3, c1 = (c + 2) % 3;
        if (r0 > r1) std::swap(r0, r1);
        if (c0 > c1) std::swap(c0, c1);
        Taylor m = M[r0][c0] * M[r1][c1] - M[r0][c1] * M[r1][c0];
        double sgn = ((r + c) % 2 == 0) ? 1.0 : -1.0;
        return m * sgn;
    };
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) inv[c][r] = cof(r, c) * dinv; // adjugate transpose
    return inv;
}

} // namespace detail

// Taylor expansion of S around a node, to total degree <= deg (deg = 2 needs
// 6th-order potential jets).  The expansion runs in rescaled displacements
// dz_v = lambda_v * dzeta_v with lambda_v = 1/sqrt(g_vv), which keeps all
// contractions O(1); without it the inverse-metric factors amplify roundoff
// by (1+t)^4 at far-field nodes.  Returns the series in the zeta variables
// together with the zeta-metric at the node.
struct ScalarJet {
    Taylor S;
    Eigen::Matrix3cd g_zeta = Eigen::Matrix3cd::Zero();
};

inline ScalarJet scalar_curvature_taylor_core(const ToricFunction& pot, const Node& nd, int n,
                                              int deg) {
    const TaylorTables& tab = TaylorTables::get(2 * n, deg + 2);
    JetTable jt(pot, nd, deg + 4, n);

    double lam[3] = {1.0, 1.0, 1.0};
    for (int v = 0; v < n; ++v) {
        MIdx e{0, 0, 0};
        e[v] = 1;
        lam[v] = 1.0 / std::sqrt(jt.j(e, e).real());
    }

    auto fact = [](int m) {
        double f = 1.0;
        for (int i = 2; i <= m; ++i) f *= i;
        return f;
    };

    std::vector<std::vector<Taylor>> G(n, std::vector<Taylor>(n, Taylor(tab)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Taylor gij(tab);
            for (std::size_t m = 0; m < tab.size(); ++m) {
                const Expo& e = tab.monomial(m);
                MIdx a{0, 0, 0}, b{0, 0, 0};
                double norm = 1.0, rescale = lam[i] * lam[j];
                for (int v = 0; v < n; ++v) {
                    a[v] = e[v];
                    b[v] = e[n + v];
                    norm *= fact(e[v]) * fact(e[n + v]);
                    rescale *= std::pow(lam[v], e[v] + e[n + v]);
                }
                a[i] += 1;
                b[j] += 1;
                if (midx_total(a) + midx_total(b) > kMaxJetOrder) continue;
                gij[m] = jt.j(a, b) * (rescale / norm);
            }
            G[i][j] = gij;
        }
    // (indices of G refer to the rescaled zeta coordinates from here on)

    Taylor L = detail::taylor_det(G, n).log();
    std::vector<std::vector<Taylor>> Ric(n, std::vector<Taylor>(n, Taylor(tab)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Ric[i][j] = L.derivative(i).derivative(n + j) * (-1.0);

    auto Ginv = detail::taylor_inverse(G, n, tab);
    ScalarJet out{Taylor(tab)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            out.S += Ginv[i][j] * Ric[j][i];
            out.g_zeta(i, j) = G[i][j].value();
        }
    return out;
}

inline Taylor scalar_curvature_taylor(const KahlerModel& model, std::size_t node, int deg) {
    return scalar_curvature_taylor_core(model.potential(), model.nodes()[node], model.dim(), deg)
        .S;
}

// Move the evaluation point into the affine chart where its coordinates are
// small.  One chart covers the whole quadrature domain, but expanding there
// at |z| >> 1 costs ~(1+t)^2 digits; the chart hop keeps S-jets uniformly
// accurate.  Returns false when the potential has no closed-form counterpart
// in the other chart (finite-difference profiles).
inline bool hop_to_best_chart(const KahlerModel& model, Node& nd, ToricPtr& pot) {
    bool changed = false;
    int coord0 = 0;
    for (const auto& f : model.factors()) {
        int best = -1;
        double tmax = 1.0;
        std::vector<int> siblings;
        for (int c = coord0; c < coord0 + f.n; ++c) {
            siblings.push_back(c);
            if (nd.t[c] > tmax) {
                tmax = nd.t[c];
                best = c;
            }
        }
        if (best >= 0) {
            ToricPtr swapped;
            try {
                swapped = pot->chart_swapped(best, siblings);
            } catch (const DomainError&) {
                coord0 += f.n;
                continue;
            }
            pot = swapped;
            cplx zc = nd.z[best];
            for (int c = coord0; c < coord0 + f.n; ++c) {
                if (c == best) continue;
                nd.z[c] /= zc;
                nd.t[c] = std::norm(nd.z[c]);
            }
            nd.z[best] = 1.0 / zc;
            nd.t[best] = std::norm(nd.z[best]);
            changed = true;
        }
        coord0 += f.n;
    }
    return changed;
}

inline double delta_scalar(const KahlerModel& model, std::size_t node) {
    const int n = model.dim();
    Node nd = model.nodes()[node];
    ToricPtr pot = model.potential_ptr();
    hop_to_best_chart(model, nd, pot);
    ScalarJet sj = scalar_curvature_taylor_core(*pot, nd, n, 2);
    Eigen::MatrixXcd ginv = sj.g_zeta.topLeftCorner(n, n).inverse();
    cplx v = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Expo e{};
            e[j] = 1;     // zeta_j
            e[n + i] = 1; // zetabar_i
            v += ginv(i, j) * sj.S.coeff(e);
        }
    return v.real();
}

inline ScalarField delta_scalar_field(const KahlerModel& model) {
    ScalarField out;
    out.model = &model;
    out.values.resize(static_cast<Eigen::Index>(model.nodes().size()));
    parallel_for(model.nodes().size(), [&](std::size_t i) {
        out.values[static_cast<Eigen::Index>(i)] = delta_scalar(model, i);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Endomorphism fields and the weak pairing of Appendix-type identities.

using EndoField = std::function<Eigen::Matrix3cd(std::size_t node)>;

inline EndoField identity_endo(const KahlerModel& model) {
    const int n = model.dim();
    return [n](std::size_t) {
        Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
        m.topLeftCorner(n, n).setIdentity();
        return m;
    };
}

// ric_p{}^q as an endomorphism of T^{1,0}.
inline EndoField ricci_endo(const KahlerModel& model) {
    return [&model](std::size_t node) {
        CurvatureData c = curvature_at(model, node);
        Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
        m.topLeftCorner(c.n, c.n) =
            c.ricci.topLeftCorner(c.n, c.n) * c.ginv.topLeftCorner(c.n, c.n);
        return m;
    };
}

inline EndoField scalar_times_identity_endo(const KahlerModel& model) {
    const int n = model.dim();
    return [&model, n](std::size_t node) {
        double S = curvature_at(model, node).scalar;
        Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
        m.topLeftCorner(n, n) = S * Eigen::MatrixXcd::Identity(n, n);
        return m;
    };
}

// int < d dbar f , endo^flat >_g  omega^n   (note: against omega^n, not
// omega^n/n!).  Pointwise integrand:  d_j dbar_k f  ell_p{}^j  g^{kbar p}.
inline cplx hessian_pairing(const KahlerModel& model, const FieldFn& f, const EndoField& endo) {
    const int n = model.dim();
    std::vector<cplx> vals(model.nodes().size());
    parallel_for(model.nodes().size(), [&](std::size_t i) {
        FieldJets fj = f(model.nodes()[i]);
        Eigen::Matrix3cd F = Eigen::Matrix3cd::Zero();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) F(a, b) = fj.ddf[a][b];
        Eigen::Matrix3cd L = endo(i);
        cplx tr = (F.topLeftCorner(n, n) * model.metric(i).ginv.topLeftCorner(n, n) *
                   L.topLeftCorner(n, n))
                      .trace();
        vals[i] = tr * model.nodes()[i].w * model.metric(i).detg;
    });
    double nfact = 1.0;
    for (int i = 2; i <= n; ++i) nfact *= i;
    return compensated_total(vals) * nfact;
}

// ---------------------------------------------------------------------------
// Hamiltonian vector field: df = iota_{X_f} omega; returns the (1,0) part,
// X^m = -i g^{kbar m} dbar_k f   (f real).

inline std::array<cplx, 3> hamiltonian_field(const KahlerModel& model, std::size_t node,
                                             const FieldJets& fj) {
    const int n = model.dim();
    const auto& ginv = model.metric(node).ginv;
    std::array<cplx, 3> X{};
    for (int m = 0; m < n; ++m) {
        cplx v = 0.0;
        for (int k = 0; k < n; ++k) v += ginv(k, m) * std::conj(fj.df[k]);
        X[m] = cplx(0.0, -1.0) * v;
    }
    return X;
}

// max_Y | df(Y) - omega(X_f, Y) | over the 2n coordinate directions.
inline double hamiltonian_residual(const KahlerModel& model, std::size_t node,
                                   const FieldJets& fj) {
    const int n = model.dim();
    auto X = hamiltonian_field(model, node, fj);
    const auto& g = model.metric(node).g;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        cplx gX = 0.0, gXc = 0.0;
        for (int j = 0; j < n; ++j) gX += g(j, i) * X[j];
        for (int k = 0; k < n; ++k) gXc += g(i, k) * std::conj(X[k]);
        // Y = d/dx_i : df(Y) = 2 Re df_i ; omega(X,Y) = i(sum_j g_{j ibar} X^j - sum_k g_{i kbar} conj(X^k))
        cplx lhs = fj.df[i] + std::conj(fj.df[i]);
        cplx rhs = cplx(0.0, 1.0) * (gX - gXc);
        worst = std::max(worst, std::abs(lhs - rhs));
        // Y = d/dy_i : df(Y) = i df_i - i dbar_i f ; dz^j(Y) = i delta, dzbar^k(Y) = -i delta
        cplx lhs2 = cplx(0.0, 1.0) * (fj.df[i] - std::conj(fj.df[i]));
        cplx rhs2 = cplx(0.0, 1.0) * (gX * cplx(0.0, -1.0) - gXc * cplx(0.0, 1.0));
        worst = std::max(worst, std::abs(lhs2 - rhs2));
    }
    return worst;
}

} // namespace zlab
