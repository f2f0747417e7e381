#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "zlab/charforms.hpp"
#include "zlab/curvature.hpp"
#include "zlab/manifold.hpp"

namespace zlab {

// ---------------------------------------------------------------------------
// Monomial bases of H^0(M, L^k) on the supported projective models.  On the
// affine chart the sections of O(kd) on a CP^n factor are the polynomials of
// total degree <= kd; the fibre metric weight is e^{-k phi_total}.

struct SectionBasis {
    const KahlerModel* model = nullptr;
    int k = 0;
    int dim = 0;
    std::vector<std::array<int, 3>> exps; // global coordinate exponents

    static SectionBasis make(const KahlerModel& model, int k) {
        if (k < 1) throw DomainError("section_basis: k must be positive");
        if (!model.quantizable())
            throw DomainError("section_basis: model carries no integral polarization");
        SectionBasis b;
        b.model = &model;
        b.k = k;
        std::vector<std::array<int, 3>> acc = {{0, 0, 0}};
        int coord0 = 0;
        long expected = 1;
        for (const auto& f : model.factors()) {
            int deg = k * f.degree;
            expected *= binomial(f.n + deg, f.n);
            std::vector<std::array<int, 3>> next;
            if (f.n == 1) {
                for (const auto& e : acc)
                    for (int a = 0; a <= deg; ++a) {
                        auto e2 = e;
                        e2[coord0] = a;
                        next.push_back(e2);
                    }
            } else if (f.n == 2) {
                for (const auto& e : acc)
                    for (int a = 0; a <= deg; ++a)
                        for (int bq = 0; bq + a <= deg; ++bq) {
                            auto e2 = e;
                            e2[coord0] = a;
                            e2[coord0 + 1] = bq;
                            next.push_back(e2);
                        }
            } else {
                for (const auto& e : acc)
                    for (int a = 0; a <= deg; ++a)
                        for (int bq = 0; bq + a <= deg; ++bq)
                            for (int cq = 0; cq + bq + a <= deg; ++cq) {
                                auto e2 = e;
                                e2[coord0] = a;
                                e2[coord0 + 1] = bq;
                                e2[coord0 + 2] = cq;
                                next.push_back(e2);
                            }
            }
            acc = std::move(next);
            coord0 += f.n;
        }
        b.exps = std::move(acc);
        b.dim = static_cast<int>(b.exps.size());
        if (b.dim != expected) throw Error("section_basis: dimension bookkeeping failed");
        return b;
    }

    static long binomial(int n, int kk) {
        long r = 1;
        for (int i = 1; i <= kk; ++i) r = r * (n - kk + i) / i;
        return r;
    }
};

inline SectionBasis section_basis(const KahlerModel& model, int k) {
    return SectionBasis::make(model, k);
}

namespace detail {

// z-powers at one node, up to `maxp` per coordinate.
struct NodePowers {
    std::array<std::vector<cplx>, 3> p;
    NodePowers(const Node& nd, int ncoord, int maxp) {
        for (int c = 0; c < ncoord; ++c) {
            p[c].resize(maxp + 1);
            p[c][0] = 1.0;
            for (int q = 1; q <= maxp; ++q) p[c][q] = p[c][q - 1] * nd.z[c];
        }
    }
    cplx mono(const std::array<int, 3>& e, int ncoord) const {
        cplx v = 1.0;
        for (int c = 0; c < ncoord; ++c) v *= p[c][e[c]];
        return v;
    }
};

} // namespace detail

// Weighted section values v_a(x) = s_a(x) e^{-k phi(x)/2}, and optionally the
// weighted polynomial derivatives (d_l s_a)(x) e^{-k phi(x)/2}.
struct SectionData {
    Eigen::MatrixXcd V;
    std::array<Eigen::MatrixXcd, 3> dV;
    Eigen::VectorXd wdet;
    bool has_derivatives = false;
};

inline SectionData section_values(const KahlerModel& model, const SectionBasis& basis,
                                  bool with_derivatives = false) {
    const int n = model.dim();
    const auto& nodes = model.nodes();
    const Eigen::Index N = static_cast<Eigen::Index>(nodes.size());
    SectionData sd;
    sd.V.resize(N, basis.dim);
    if (with_derivatives)
        for (int c = 0; c < n; ++c) sd.dV[c].resize(N, basis.dim);
    sd.has_derivatives = with_derivatives;
    sd.wdet.resize(N);
    int maxp = 0;
    for (const auto& e : basis.exps)
        for (int c = 0; c < n; ++c) maxp = std::max(maxp, e[c]);

    parallel_for(nodes.size(), [&](std::size_t x) {
        const Node& nd = nodes[x];
        MIdx g0{0, 0, 0};
        double phi = model.potential().t_derivative(g0, nd.t.data());
        double halfw = std::exp(-0.5 * basis.k * phi);
        detail::NodePowers pw(nd, n, maxp);
        sd.wdet[static_cast<Eigen::Index>(x)] = nd.w * model.metric(x).detg;
        for (int a = 0; a < basis.dim; ++a) {
            const auto& e = basis.exps[a];
            sd.V(static_cast<Eigen::Index>(x), a) = pw.mono(e, n) * halfw;
            if (with_derivatives)
                for (int c = 0; c < n; ++c) {
                    cplx d = 0.0;
                    if (e[c] > 0) {
                        auto e2 = e;
                        e2[c] -= 1;
                        d = static_cast<double>(e[c]) * pw.mono(e2, n);
                    }
                    sd.dV[c](static_cast<Eigen::Index>(x), a) = d * halfw;
                }
        }
    });
    return sd;
}

// ---------------------------------------------------------------------------
// Gram matrix of the L^2 products and its orthonormalization.  On invariant
// node sets the angular integrals are exact zeros off the torus-weight
// diagonal, so the matrix is assembled diagonally there; the conditioning
// gate applies to the diagonally preconditioned matrix (the raw monomial
// Gram spread is not a quadrature failure).

struct GramMatrix {
    const KahlerModel* model = nullptr;
    int k = 0;
    Eigen::MatrixXcd G;
    Eigen::MatrixXcd C;    // V C is an orthonormal basis: C^* G C = 1
    Eigen::MatrixXcd Ginv; // exact inverse of G
    double precond_cond = 1.0;
    double log_det = 0.0;
    bool diagonal = false;
};

inline GramMatrix gram(const KahlerModel& model, int k,
                       const SectionData* precomputed = nullptr) {
    SectionBasis basis = section_basis(model, k);
    SectionData local;
    const SectionData& sd = precomputed ? *precomputed : (local = section_values(model, basis));

    GramMatrix gm;
    gm.model = &model;
    gm.k = k;
    const int d = basis.dim;
    if (model.invariant_nodes()) {
        // distinct torus weights: the off-diagonal L^2 products vanish exactly
        gm.diagonal = true;
        gm.G = Eigen::MatrixXcd::Zero(d, d);
        for (int a = 0; a < d; ++a) {
            KahanSum s;
            for (Eigen::Index x = 0; x < sd.V.rows(); ++x)
                s.add(sd.wdet[x] * std::norm(sd.V(x, a)));
            gm.G(a, a) = s.value();
        }
    } else {
        gm.G = sd.V.adjoint() * sd.wdet.asDiagonal() * sd.V;
    }

    Eigen::VectorXd D = gm.G.diagonal().real();
    if (D.minCoeff() <= 0.0)
        throw ConditioningError("gram: nonpositive diagonal entry; raise the quadrature level");
    Eigen::VectorXd Dm = D.cwiseSqrt().cwiseInverse();

    if (gm.diagonal) {
        gm.C = Dm.asDiagonal();
        gm.Ginv = D.cwiseInverse().asDiagonal();
        gm.precond_cond = 1.0;
        KahanSum ld;
        for (int a = 0; a < d; ++a) ld.add(std::log(D[a]));
        gm.log_det = ld.value();
        return gm;
    }

    Eigen::MatrixXcd P = Dm.asDiagonal() * gm.G * Dm.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(P);
    double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
        throw ConditioningError(
            "gram: preconditioned condition number above 1e12; raise the quadrature level or "
            "reduce k");
    gm.precond_cond = lmax / lmin;
    Eigen::VectorXd li = es.eigenvalues().cwiseSqrt().cwiseInverse();
    gm.C = Dm.asDiagonal() * (es.eigenvectors() * li.asDiagonal() * es.eigenvectors().adjoint());
    Eigen::VectorXd linv = es.eigenvalues().cwiseInverse();
    gm.Ginv =
        Dm.asDiagonal() *
        (es.eigenvectors() * linv.asDiagonal() * es.eigenvectors().adjoint()) * Dm.asDiagonal();
    KahanSum ld;
    for (int a = 0; a < d; ++a) ld.add(std::log(D[a]));
    for (int a = 0; a < d; ++a) ld.add(std::log(es.eigenvalues()[a]));
    gm.log_det = ld.value();
    return gm;
}

// ---------------------------------------------------------------------------

inline ScalarField bergman_density(const KahlerModel& model, int k) {
    SectionBasis basis = section_basis(model, k);
    SectionData sd = section_values(model, basis);
    GramMatrix gm = gram(model, k, &sd);
    ScalarField out;
    out.model = &model;
    const Eigen::Index N = sd.V.rows();
    out.values.resize(N);
    Eigen::MatrixXcd Von = sd.V * gm.C;
    for (Eigen::Index x = 0; x < N; ++x) out.values[x] = Von.row(x).squaredNorm();
    return out;
}

// rho_k together with its complex Laplacian (all derivatives analytic).
struct BergmanJets {
    ScalarField rho;
    ScalarField lap_rho;
};

inline BergmanJets bergman_jets(const KahlerModel& model, int k) {
    const int n = model.dim();
    SectionBasis basis = section_basis(model, k);
    SectionData sd = section_values(model, basis, /*with_derivatives=*/true);
    GramMatrix gm = gram(model, k, &sd);

    BergmanJets out;
    out.rho.model = &model;
    out.lap_rho.model = &model;
    const Eigen::Index N = sd.V.rows();
    out.rho.values.resize(N);
    out.lap_rho.values.resize(N);

    parallel_for(model.nodes().size(), [&](std::size_t xi) {
        Eigen::Index x = static_cast<Eigen::Index>(xi);
        JetTable jt = model.jets(xi, 2);
        // first potential derivatives
        std::array<cplx, 3> dphi{};
        for (int c = 0; c < n; ++c) {
            MIdx a{0, 0, 0}, b{0, 0, 0};
            a[c] = 1;
            dphi[c] = jt.j(a, b);
        }
        Eigen::VectorXcd u = sd.V.row(x).transpose();
        // rho = P e^{-k phi} with P = sum Ginv_ab conj(s_a) s_b.  The rows of
        // V/dV carry e^{-k phi/2} each, so the quadratic forms below are the
        // derivatives of P times the full weight; the product rule supplies
        // the remaining phi-terms.
        cplx F = u.dot(gm.Ginv * u);
        std::array<cplx, 3> dF{};
        std::array<std::array<cplx, 3>, 3> ddF{};
        std::array<Eigen::VectorXcd, 3> du;
        for (int c = 0; c < n; ++c) du[c] = sd.dV[c].row(x).transpose();
        for (int c = 0; c < n; ++c) dF[c] = u.dot(gm.Ginv * du[c]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) ddF[i][j] = du[j].dot(gm.Ginv * du[i]);
        cplx lap = 0.0;
        const auto& ginv = model.metric(xi).ginv;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                MIdx a{0, 0, 0}, b{0, 0, 0};
                a[i] = 1;
                b[j] = 1;
                cplx phi_ij = jt.j(a, b);
                cplx dd = ddF[i][j] - static_cast<double>(k) * std::conj(dphi[j]) * dF[i] -
                          static_cast<double>(k) * phi_ij * F -
                          static_cast<double>(k) * dphi[i] * std::conj(dF[j]) +
                          static_cast<double>(k * k) * dphi[i] * std::conj(dphi[j]) * F;
                lap += ginv(j, i) * dd;
            }
        out.rho.values[x] = F;
        out.lap_rho.values[x] = lap;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Operators compressed to H^0 in the orthonormalized basis.

enum class OperatorKind { toeplitz, kostant_souriau, product };

struct OperatorMatrix {
    OperatorKind kind = OperatorKind::toeplitz;
    int k = 0;
    Eigen::MatrixXcd A;
};

inline double operator_norm(const Eigen::MatrixXcd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

// Compression of multiplication by a (possibly complex) symbol given by its
// node values.
inline OperatorMatrix toeplitz(const KahlerModel& model, int k, const Eigen::VectorXcd& f) {
    SectionBasis basis = section_basis(model, k);
    SectionData sd = section_values(model, basis);
    GramMatrix gm = gram(model, k, &sd);
    const Eigen::Index N = sd.V.rows();
    if (f.size() != N) throw NodeMismatchError("toeplitz: symbol sampled on a different node set");
    Eigen::MatrixXcd M(basis.dim, basis.dim);
    if (model.invariant_nodes()) {
        M.setZero();
        for (int a = 0; a < basis.dim; ++a) {
            KahanSumC s;
            for (Eigen::Index x = 0; x < N; ++x)
                s.add(sd.wdet[x] * f[x] * std::norm(sd.V(x, a)));
            M(a, a) = s.value();
        }
    } else {
        M = sd.V.adjoint() * (sd.wdet.array() * f.array()).matrix().asDiagonal() * sd.V;
    }
    OperatorMatrix op;
    op.kind = OperatorKind::toeplitz;
    op.k = k;
    op.A = gm.C.adjoint() * M * gm.C;
    return op;
}

inline OperatorMatrix toeplitz(const KahlerModel& model, int k, const FieldFn& symbol) {
    Eigen::VectorXcd f(static_cast<Eigen::Index>(model.nodes().size()));
    for (std::size_t x = 0; x < model.nodes().size(); ++x)
        f[static_cast<Eigen::Index>(x)] = symbol(model.nodes()[x]).f;
    return toeplitz(model, k, f);
}

// P_f^{(k)} = nabla_{-X_f} + i k f compressed to H^0.  In the affine
// trivialization the Chern connection of (L^k, h^k e^{-k phi_pert}) acts on
// polynomial representatives as  nabla^{1,0} p = dp - k (d phi_total) p;
// an optional extra weight e^{-g} (at the L^k level) shifts the connection
// by -(d g).
inline OperatorMatrix kostant_souriau(const KahlerModel& model, int k, const FieldFn& f,
                                      const FieldFn* extra_weight = nullptr) {
    const int n = model.dim();
    SectionBasis basis = section_basis(model, k);
    SectionData sd = section_values(model, basis, /*with_derivatives=*/true);
    GramMatrix gm = gram(model, k, &sd);
    const Eigen::Index N = sd.V.rows();
    const int d = basis.dim;

    // per-node ingredients
    Eigen::MatrixXcd PfV(N, d);
    parallel_for(model.nodes().size(), [&](std::size_t xi) {
        Eigen::Index x = static_cast<Eigen::Index>(xi);
        const Node& nd = model.nodes()[xi];
        FieldJets fj = f(nd);
        auto X = hamiltonian_field(model, xi, fj);
        JetTable jt = model.jets(xi, 1);
        std::array<cplx, 3> dlogw{}; // d_l of (k phi + g_extra)
        for (int c = 0; c < n; ++c) {
            MIdx a{0, 0, 0}, b{0, 0, 0};
            a[c] = 1;
            dlogw[c] = static_cast<double>(k) * jt.j(a, b);
        }
        if (extra_weight) {
            FieldJets gj = (*extra_weight)(nd);
            for (int c = 0; c < n; ++c) dlogw[c] += gj.df[c];
        }
        for (int a = 0; a < d; ++a) {
            cplx nab = 0.0;
            for (int l = 0; l < n; ++l)
                nab += X[l] * (sd.dV[l](x, a) - dlogw[l] * sd.V(x, a));
            PfV(x, a) = -nab + cplx(0.0, 1.0) * static_cast<double>(k) * fj.f * sd.V(x, a);
        }
    });

    Eigen::MatrixXcd K(d, d);
    if (model.invariant_nodes()) {
        K.setZero();
        for (int a = 0; a < d; ++a) {
            KahanSumC s;
            for (Eigen::Index x = 0; x < N; ++x)
                s.add(sd.wdet[x] * std::conj(sd.V(x, a)) * PfV(x, a));
            K(a, a) = s.value();
        }
    } else {
        K = sd.V.adjoint() * sd.wdet.asDiagonal() * PfV;
    }
    OperatorMatrix op;
    op.kind = OperatorKind::kostant_souriau;
    op.k = k;
    op.A = gm.C.adjoint() * K * gm.C;
    return op;
}

// || Q_f - T_{i(kf - Delta f)} ||: vanishes identically in exact arithmetic,
// so the value reported is pure quadrature error.
inline double tuynman_residual(const KahlerModel& model, int k, const FieldFn& f) {
    OperatorMatrix Q = kostant_souriau(model, k, f);
    Eigen::VectorXcd symbol(static_cast<Eigen::Index>(model.nodes().size()));
    for (std::size_t x = 0; x < model.nodes().size(); ++x) {
        FieldJets fj = f(model.nodes()[x]);
        symbol[static_cast<Eigen::Index>(x)] =
            cplx(0.0, 1.0) * (static_cast<double>(k) * fj.f - laplacian_at(model, x, fj));
    }
    OperatorMatrix T = toeplitz(model, k, symbol);
    return operator_norm(Q.A - T.A);
}

// Trace expansion of the compressed prequantum operator.
struct TraceExpansionReport {
    std::vector<int> ks;
    std::vector<double> traces; // Tr[Q_f] / i
    double leading = 0.0, subleading = 0.0;
    double ref_leading = 0.0, ref_subleading = 0.0;
    double rel_err_leading = 0.0, rel_err_subleading = 0.0;
    double fit_cond = 0.0, fit_residual = 0.0;
};

inline TraceExpansionReport trace_expansion_check(const KahlerModel& model, const FieldFn& f,
                                                  const std::vector<int>& ks) {
    if (ks.size() < 3) throw DomainError("trace_expansion_check: need at least three k values");
    const int n = model.dim();
    TraceExpansionReport rep;
    rep.ks = ks;
    for (int k : ks) {
        OperatorMatrix K = kostant_souriau(model, k, f);
        rep.traces.push_back(K.A.trace().imag());
    }
    std::vector<double> powers = {double(n + 1), double(n), double(n - 1)};
    if (ks.size() >= 5) powers.push_back(double(n - 2)); // guard term against truncation bias
    Eigen::MatrixXd A(ks.size(), powers.size());
    Eigen::VectorXd b(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        for (std::size_t j = 0; j < powers.size(); ++j)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::pow(double(ks[i]), powers[j]);
        b[static_cast<Eigen::Index>(i)] = rep.traces[i];
    }
    auto fit = least_squares_scaled(A, b);
    rep.leading = fit.coeff[0];
    rep.subleading = fit.coeff[1];
    rep.fit_cond = fit.cond;
    rep.fit_residual = fit.residual_norm;

    rep.ref_leading = integrate_real(model, sample(model, f));
    auto S = scalar_curvature_field(model);
    auto fv = sample(model, f);
    ScalarField fS = S;
    for (Eigen::Index i = 0; i < fS.values.size(); ++i) fS.values[i] *= 0.5 * fv.values[i];
    rep.ref_subleading = integrate_real(model, fS);
    rep.rel_err_leading = rel_err(rep.leading, rep.ref_leading);
    rep.rel_err_subleading = rel_err(rep.subleading, rep.ref_subleading);
    return rep;
}

// |d/dt log det Gram - integral|, the finite-k variational identity: along
// phi_t = phi + t*dphi,
//   d/dt log det Gram = - int dphi (k rho_k - Delta rho_k) dmu_phi
// realized weakly through int rho (Delta dphi - k dphi) dmu (self-adjoint
// Laplacian), so no derivatives of rho are needed.
inline double donaldson_variation_residual(const KahlerModel& model, int k, ToricPtr dphi,
                                           double h) {
    auto mp = perturb(model, dphi, h);
    auto mm = perturb(model, dphi, -h);
    double fd = (gram(*mp, k).log_det - gram(*mm, k).log_det) / (2.0 * h);

    ScalarField rho = bergman_density(model, k);
    FieldFn dphif = field_from_toric(dphi);
    ScalarField integrand = laplacian(model, dphif);
    auto dv = sample(model, dphif);
    for (Eigen::Index i = 0; i < integrand.values.size(); ++i)
        integrand.values[i] =
            rho.values[i] * (integrand.values[i] - static_cast<double>(k) * dv.values[i]);
    double rhs = integrate_real(model, integrand);
    return std::abs(fd - rhs);
}

// || (KS with weight h e^{-g}) - (KS with h) - T_{iota_{X_f} d g} ||, the
// metric-shift identity for the prequantum moment map; both operators are
// compressed in the unmodified orthonormal basis.
inline double moment_shift_check(const KahlerModel& model, int k, const FieldFn& f,
                                 const FieldFn& g) {
    OperatorMatrix shifted = kostant_souriau(model, k, f, &g);
    OperatorMatrix base = kostant_souriau(model, k, f);
    Eigen::VectorXcd symbol(static_cast<Eigen::Index>(model.nodes().size()));
    for (std::size_t x = 0; x < model.nodes().size(); ++x) {
        FieldJets fj = f(model.nodes()[x]);
        FieldJets gj = g(model.nodes()[x]);
        auto X = hamiltonian_field(model, x, fj);
        cplx v = 0.0;
        for (int l = 0; l < model.dim(); ++l) v += X[l] * gj.df[l];
        symbol[static_cast<Eigen::Index>(x)] = v;
    }
    OperatorMatrix T = toeplitz(model, k, symbol);
    return operator_norm(shifted.A - base.A - T.A);
}

} // namespace zlab
