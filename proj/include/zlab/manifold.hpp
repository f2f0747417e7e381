#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "zlab/numerics.hpp"
#include "zlab/quadrature.hpp"
#include "zlab/toric.hpp"

namespace zlab {

// A projective factor CP^n polarized by O(degree).  degree == 0 marks a model
// that carries no integral polarization (non-integer metric scale); section
// spaces are then unavailable.
struct Factor {
    int n = 1;
    int degree = 1;
};

struct Node {
    std::array<cplx, 3> z{};  // affine chart coordinates
    std::array<double, 3> t{}; // |z_i|^2
    double w = 0.0;            // integrate f = sum_x w * det g * f  (dt-measure, angles folded in)
};

// ---------------------------------------------------------------------------
// Jet table: all mixed Wirtinger derivatives of the total potential at one
// node, assembled from exact t-partials through the chain tables.  Conjugate
// symmetry  j(b,a) == conj(j(a,b))  holds bitwise by construction.

class JetTable {
  public:
    JetTable(const ToricFunction& V, const Node& node, int order, int ncoords)
        : order_(order), nc_(ncoords) {
        tpart_.assign(pack_limit(), 0.0);
        MIdx g{0, 0, 0};
        fill_tparts(V, node, g, 0, 0);
        for (int c = 0; c < nc_; ++c) {
            zp_[c][0] = 1.0;
            zbp_[c][0] = 1.0;
            for (int p = 1; p <= order; ++p) {
                zp_[c][p] = zp_[c][p - 1] * node.z[c];
                zbp_[c][p] = zbp_[c][p - 1] * std::conj(node.z[c]);
            }
        }
    }

    cplx j(const MIdx& a, const MIdx& b) const {
        const ChainTable& C = ChainTable::get();
        KahanSumC acc;
        MIdx g{0, 0, 0};
        // nested loops over gamma_i in [max(a_i,b_i), a_i+b_i]
        int lo0 = std::max(a[0], b[0]), hi0 = a[0] + b[0];
        int lo1 = std::max(a[1], b[1]), hi1 = a[1] + b[1];
        int lo2 = std::max(a[2], b[2]), hi2 = a[2] + b[2];
        for (g[0] = lo0; g[0] <= hi0; ++g[0])
            for (g[1] = lo1; g[1] <= hi1; ++g[1])
                for (g[2] = lo2; g[2] <= hi2; ++g[2]) {
                    if (midx_total(g) > order_) continue;
                    cplx term = tpart_[pack(g)];
                    if (term == 0.0) continue;
                    for (int c = 0; c < nc_; ++c) {
                        term *= C.coef(a[c], b[c], g[c]);
                        term *= zp_[c][g[c] - a[c]] * zbp_[c][g[c] - b[c]];
                    }
                    acc.add(term);
                }
        return acc.value();
    }

  private:
    std::size_t pack(const MIdx& g) const {
        return static_cast<std::size_t>(g[0]) +
               static_cast<std::size_t>(kMaxJetOrder + 1) *
                   (static_cast<std::size_t>(g[1]) +
                    static_cast<std::size_t>(kMaxJetOrder + 1) * static_cast<std::size_t>(g[2]));
    }
    std::size_t pack_limit() const {
        std::size_t s = kMaxJetOrder + 1;
        return s * s * s;
    }
    void fill_tparts(const ToricFunction& V, const Node& node, MIdx& g, int var, int used) {
        if (var == nc_) {
            tpart_[pack(g)] = V.t_derivative(g, node.t.data());
            return;
        }
        for (int p = 0; p + used <= order_; ++p) {
            g[var] = p;
            fill_tparts(V, node, g, var + 1, used + p);
        }
        g[var] = 0;
    }

    int order_, nc_;
    std::vector<double> tpart_;
    std::array<std::array<cplx, kMaxJetOrder + 1>, 3> zp_, zbp_;
};

struct MetricAtNode {
    Eigen::Matrix3cd g = Eigen::Matrix3cd::Zero();
    Eigen::Matrix3cd ginv = Eigen::Matrix3cd::Zero();
    double detg = 0.0;
};

// The affine chart.  All built-in models are covered by a single chart whose
// complement has measure zero; the integration domain is the image of
// (0,1)^dim x angles under the radial substitution.
struct Chart {
    int id = 0;
    int dim = 1;
    std::string integration_domain;
};

// ---------------------------------------------------------------------------

class KahlerModel {
  public:
    KahlerModel(std::string name, std::vector<Factor> factors, std::vector<double> scales,
                ToricPtr potential, int radial_level, int angular_level, double volume_norm,
                double volume_tol = 1e-10)
        : name_(std::move(name)),
          factors_(std::move(factors)),
          scales_(std::move(scales)),
          potential_(std::move(potential)),
          radial_level_(radial_level),
          angular_level_(angular_level),
          volume_norm_(volume_norm),
          volume_tol_(volume_tol) {
        dim_ = 0;
        for (const auto& f : factors_) dim_ += f.n;
        if (dim_ < 1 || dim_ > 3) throw DomainError("KahlerModel: dimension must be 1..3");
        build_nodes();
        build_metric_cache();
        validate_volume();
    }

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    const std::vector<Factor>& factors() const { return factors_; }
    double factor_scale(std::size_t i) const { return scales_[i]; }
    const ToricFunction& potential() const { return *potential_; }
    ToricPtr potential_ptr() const { return potential_; }
    int radial_level() const { return radial_level_; }
    int angular_level() const { return angular_level_; }
    bool invariant_nodes() const { return angular_level_ == 0; }
    double volume_normalization() const { return volume_norm_; }
    double volume_tolerance() const { return volume_tol_; }
    double quadrature_volume() const { return quad_volume_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const MetricAtNode& metric(std::size_t i) const { return metric_[i]; }

    Chart chart() const {
        Chart c;
        c.dim = dim_;
        c.integration_domain = "(0,1)^" + std::to_string(dim_) + " radial via t = s/(1-s)" +
                               (invariant_nodes() ? "" : " x uniform angles");
        return c;
    }

    JetTable jets(std::size_t node, int order) const {
        if (order > kMaxJetOrder) throw DomainError("jets: order exceeds 6");
        return JetTable(*potential_, nodes_[node], order, dim_);
    }

    cplx jet(std::size_t node, const MIdx& a, const MIdx& b) const {
        return jets(node, midx_total(a) + midx_total(b)).j(a, b);
    }

    // Total polarization weight at level k for the section spaces: the metric
    // on L^k is  e^{-k * potential}.
    bool quantizable() const {
        for (const auto& f : factors_)
            if (f.degree < 1) return false;
        return true;
    }

  private:
    void build_nodes() {
        // radial skeleton per factor
        std::vector<std::vector<Node>> factor_nodes;
        int coord0 = 0;
        for (const auto& f : factors_) {
            std::vector<Node> fn;
            if (f.n == 1) {
                RadialRule rad(radial_level_);
                if (angular_level_ > 0) {
                    auto th = uniform_angles(angular_level_);
                    for (std::size_t i = 0; i < rad.t.size(); ++i)
                        for (double a : th) {
                            Node nd;
                            nd.t[0] = rad.t[i];
                            nd.z[0] = std::sqrt(rad.t[i]) * cplx(std::cos(a), std::sin(a));
                            nd.w = rad.w[i] / angular_level_;
                            fn.push_back(nd);
                        }
                } else {
                    for (std::size_t i = 0; i < rad.t.size(); ++i) {
                        Node nd;
                        nd.t[0] = rad.t[i];
                        nd.z[0] = std::sqrt(rad.t[i]);
                        nd.w = rad.w[i];
                        fn.push_back(nd);
                    }
                }
            } else if (f.n == 2) {
                SimplexRadialRule sx(radial_level_);
                for (std::size_t i = 0; i < sx.w.size(); ++i) {
                    Node nd;
                    nd.t[0] = sx.t1[i];
                    nd.t[1] = sx.t2[i];
                    nd.z[0] = std::sqrt(sx.t1[i]);
                    nd.z[1] = std::sqrt(sx.t2[i]);
                    nd.w = sx.w[i];
                    fn.push_back(nd);
                }
            } else { // n == 3: nested Dirichlet split, exact on the monomial family
                RadialRule rad(radial_level_);
                GaussLegendre gl(radial_level_);
                for (std::size_t i = 0; i < rad.t.size(); ++i)
                    for (int a = 0; a < radial_level_; ++a)
                        for (int b = 0; b < radial_level_; ++b) {
                            double tau = rad.t[i];
                            double x = 0.5 * (gl.x[a] + 1.0), wx = 0.5 * gl.w[a];
                            double y = 0.5 * (gl.x[b] + 1.0), wy = 0.5 * gl.w[b];
                            Node nd;
                            nd.t[0] = tau * x;
                            nd.t[1] = tau * (1.0 - x) * y;
                            nd.t[2] = tau * (1.0 - x) * (1.0 - y);
                            for (int c = 0; c < 3; ++c) nd.z[c] = std::sqrt(nd.t[c]);
                            nd.w = rad.w[i] * wx * wy * tau * tau * (1.0 - x);
                            fn.push_back(nd);
                        }
            }
            factor_nodes.push_back(std::move(fn));
            coord0 += f.n;
        }
        // tensor the factors
        nodes_ = factor_nodes[0];
        int off = factors_[0].n;
        for (std::size_t fi = 1; fi < factor_nodes.size(); ++fi) {
            std::vector<Node> merged;
            merged.reserve(nodes_.size() * factor_nodes[fi].size());
            for (const Node& a : nodes_)
                for (const Node& b : factor_nodes[fi]) {
                    Node nd = a;
                    for (int c = 0; c < factors_[fi].n; ++c) {
                        nd.z[off + c] = b.z[c];
                        nd.t[off + c] = b.t[c];
                    }
                    nd.w = a.w * b.w;
                    merged.push_back(nd);
                }
            nodes_ = std::move(merged);
            off += factors_[fi].n;
        }
    }

    void build_metric_cache() {
        metric_.resize(nodes_.size());
        std::vector<int> bad(nodes_.size(), 0);
        parallel_for(nodes_.size(), [&](std::size_t i) {
            JetTable jt(*potential_, nodes_[i], 2, dim_);
            MetricAtNode m;
            for (int p = 0; p < dim_; ++p)
                for (int q = 0; q < dim_; ++q) {
                    MIdx a{0, 0, 0}, b{0, 0, 0};
                    a[p] = 1;
                    b[q] = 1;
                    m.g(p, q) = jt.j(a, b);
                }
            Eigen::MatrixXcd gn = m.g.topLeftCorner(dim_, dim_);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gn);
            if (es.eigenvalues().minCoeff() <= 0.0) {
                bad[i] = 1;
                return;
            }
            m.detg = gn.determinant().real();
            m.ginv.topLeftCorner(dim_, dim_) = gn.inverse();
            metric_[i] = m;
        });
        for (std::size_t i = 0; i < bad.size(); ++i)
            if (bad[i])
                throw PositivityError("metric not positive definite at node " + std::to_string(i) +
                                      " (t = " + std::to_string(nodes_[i].t[0]) + ", " +
                                      std::to_string(nodes_[i].t[1]) + ")");
        KahanSum vol;
        for (std::size_t i = 0; i < nodes_.size(); ++i) vol.add(nodes_[i].w * metric_[i].detg);
        quad_volume_ = vol.value();
    }

    void validate_volume() const {
        if (std::abs(quad_volume_ - volume_norm_) > volume_tol_ * std::abs(volume_norm_))
            throw Error("quadrature volume " + std::to_string(quad_volume_) +
                        " disagrees with class volume " + std::to_string(volume_norm_));
    }

    std::string name_;
    std::vector<Factor> factors_;
    std::vector<double> scales_;
    ToricPtr potential_;
    int dim_;
    int radial_level_, angular_level_;
    double volume_norm_, volume_tol_, quad_volume_ = 0.0;
    std::vector<Node> nodes_;
    std::vector<MetricAtNode> metric_;
};

// ---------------------------------------------------------------------------
// Fields

struct ScalarField {
    const KahlerModel* model = nullptr;
    Eigen::VectorXcd values;
};

struct FieldJets {
    cplx f = 0.0;
    std::array<cplx, 3> df{};                  // d/dz_i
    std::array<std::array<cplx, 3>, 3> ddf{};  // d/dz_i d/dzbar_j
};

using FieldFn = std::function<FieldJets(const Node&)>;

inline FieldFn field_from_toric(ToricPtr F) {
    return [F](const Node& nd) {
        FieldJets out;
        int nv = F->vars();
        MIdx g0{0, 0, 0};
        out.f = F->t_derivative(g0, nd.t.data());
        for (int i = 0; i < nv; ++i) {
            MIdx gi{0, 0, 0};
            gi[i] = 1;
            double Fi = F->t_derivative(gi, nd.t.data());
            out.df[i] = std::conj(nd.z[i]) * Fi;
            for (int j = 0; j < nv; ++j) {
                MIdx gij = gi;
                gij[j] += 1;
                double Fij = F->t_derivative(gij, nd.t.data());
                cplx v = std::conj(nd.z[i]) * nd.z[j] * Fij;
                if (i == j) v += Fi;
                out.ddf[i][j] = v;
            }
        }
        return out;
    };
}

// Re(z_c^l) * R(t_c): the angular presets used on CP^1 factors.
inline FieldFn field_angular(int coord, int l, ToricPtr R) {
    if (l < 1) throw DomainError("field_angular: l >= 1");
    return [coord, l, R](const Node& nd) {
        auto rad = field_from_toric(R)(nd);
        cplx z = nd.z[coord], zb = std::conj(z);
        cplx zl = std::pow(z, l), zbl = std::pow(zb, l);
        cplx A = 0.5 * (zl + zbl);
        // dA/dz = l/2 z^{l-1}; dA/dzbar d/dz = 0
        FieldJets out;
        out.f = A * rad.f;
        for (int i = 0; i < 3; ++i) out.df[i] = A * rad.df[i];
        out.df[coord] += 0.5 * static_cast<double>(l) * std::pow(z, l - 1) * rad.f;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out.ddf[i][j] = A * rad.ddf[i][j];
        // (d_i A)(dbar_j R) and (dbar_j A)(d_i R); R is real so dbar R = conj(d R)
        for (int j = 0; j < 3; ++j)
            out.ddf[coord][j] +=
                0.5 * static_cast<double>(l) * std::pow(z, l - 1) * std::conj(rad.df[j]);
        for (int i = 0; i < 3; ++i)
            out.ddf[i][coord] += 0.5 * static_cast<double>(l) * std::pow(zb, l - 1) * rad.df[i];
        return out;
    };
}

inline FieldFn field_rotated(FieldFn f, int coord, double theta) {
    cplx phase(std::cos(-theta), std::sin(-theta));
    return [f, coord, phase](const Node& nd) {
        Node r = nd;
        r.z[coord] *= phase;
        FieldJets in = f(r);
        FieldJets out = in;
        for (int i = 0; i < 3; ++i) {
            out.df[i] = in.df[i] * (i == coord ? phase : cplx(1.0));
            for (int j = 0; j < 3; ++j) {
                cplx fac = (i == coord ? phase : cplx(1.0)) *
                           (j == coord ? std::conj(phase) : cplx(1.0));
                out.ddf[i][j] = in.ddf[i][j] * fac;
            }
        }
        return out;
    };
}

inline ScalarField sample(const KahlerModel& model, const FieldFn& f) {
    ScalarField out;
    out.model = &model;
    out.values.resize(static_cast<Eigen::Index>(model.nodes().size()));
    parallel_for(model.nodes().size(), [&](std::size_t i) {
        out.values[static_cast<Eigen::Index>(i)] = f(model.nodes()[i]).f;
    });
    return out;
}

inline ScalarField constant_field(const KahlerModel& model, cplx c) {
    ScalarField out;
    out.model = &model;
    out.values = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(model.nodes().size()), c);
    return out;
}

// integral against omega^n / n! (internal normalization: the CP^1 line has
// volume equal to its class degree).
inline cplx integrate(const KahlerModel& model, const ScalarField& field) {
    if (field.model != &model ||
        field.values.size() != static_cast<Eigen::Index>(model.nodes().size()))
        throw NodeMismatchError("integrate: field sampled on a different node set");
    KahanSumC s;
    for (std::size_t i = 0; i < model.nodes().size(); ++i)
        s.add(model.nodes()[i].w * model.metric(i).detg *
              field.values[static_cast<Eigen::Index>(i)]);
    return s.value();
}

inline double integrate_real(const KahlerModel& model, const ScalarField& field) {
    cplx v = integrate(model, field);
    return v.real();
}

// ---------------------------------------------------------------------------
// Builders

inline double cpn_volume(int n, double scale) {
    double v = 1.0;
    for (int i = 1; i <= n; ++i) v *= scale / i;
    return v; // scale^n / n!
}

inline std::shared_ptr<KahlerModel> make_fubini_study(int n, double scale, int radial_level = 64,
                                                      int angular_level = -1) {
    if (n < 1 || n > 3) throw DomainError("make_fubini_study: n must be 1..3");
    if (!(scale > 0.0)) throw DomainError("make_fubini_study: scale must be positive");
    if (angular_level < 0) angular_level = (n == 1) ? 64 : 0;
    if (n > 1 && angular_level != 0)
        throw DomainError("explicit angular nodes are only offered on CP^1 factors");
    int deg = 0;
    if (std::abs(scale - std::round(scale)) < 1e-12 && scale >= 1.0)
        deg = static_cast<int>(std::round(scale));
    Factor f{n, deg};
    auto pot = std::make_shared<FubiniStudyPotential>(n, scale);
    return std::make_shared<KahlerModel>("fs" + std::to_string(n), std::vector<Factor>{f},
                                         std::vector<double>{scale}, pot, radial_level,
                                         angular_level, cpn_volume(n, scale));
}

// S^1-invariant metric on CP^1 from a radial profile u(t); the class is fixed
// to the degree-1 Fubini-Study class (t u'(t) -> 1), cf. docs/conventions.md
// for the behaviour required at t -> 0 and t -> infinity.
inline std::shared_ptr<KahlerModel> make_u1_sphere(ToricPtr profile, int radial_level = 64,
                                                   int angular_level = 64,
                                                   double volume_tol = 1e-10) {
    if (profile->vars() != 1) throw DomainError("make_u1_sphere: profile must be one-variable");
    Factor f{1, 1};
    return std::make_shared<KahlerModel>("u1profile", std::vector<Factor>{f},
                                         std::vector<double>{1.0}, std::move(profile),
                                         radial_level, angular_level, 1.0, volume_tol);
}

inline std::shared_ptr<KahlerModel> make_u1_sphere(std::function<double(double)> u,
                                                   int radial_level = 64, int angular_level = 64) {
    // finite-difference jets are good to ~1e-6; the volume gate is widened
    return make_u1_sphere(std::make_shared<FiniteDifferenceProfile>(std::move(u)), radial_level,
                          angular_level, 1e-5);
}

namespace detail {
class ShiftedToric final : public ToricFunction {
  public:
    ShiftedToric(int nvars, ToricPtr inner, int offset)
        : nv_(nvars), inner_(std::move(inner)), off_(offset) {}
    int vars() const override { return nv_; }
    double t_derivative(const MIdx& g, const double* t) const override {
        for (int v = 0; v < off_; ++v)
            if (g[v] != 0) return 0.0;
        MIdx gi{0, 0, 0};
        for (int v = 0; v < inner_->vars(); ++v) gi[v] = g[off_ + v];
        for (int v = off_ + inner_->vars(); v < nv_; ++v)
            if (g[v] != 0) return 0.0;
        return inner_->t_derivative(gi, t + off_);
    }
    ToricPtr chart_swapped(int coord, const std::vector<int>& siblings) const override {
        if (coord < off_ || coord >= off_ + inner_->vars()) {
            for (int s : siblings)
                if (s >= off_ && s < off_ + inner_->vars())
                    throw DomainError("chart swap: term straddles the swapped factor");
            return std::make_shared<ShiftedToric>(nv_, inner_, off_);
        }
        std::vector<int> local;
        for (int s : siblings)
            if (s >= off_ && s < off_ + inner_->vars()) local.push_back(s - off_);
        return std::make_shared<ShiftedToric>(nv_, inner_->chart_swapped(coord - off_, local),
                                              off_);
    }

  private:
    int nv_;
    ToricPtr inner_;
    int off_;
};
} // namespace detail

inline std::shared_ptr<KahlerModel> product_model(const KahlerModel& A, const KahlerModel& B) {
    int dim = A.dim() + B.dim();
    if (dim > 3) throw DomainError("product_model: total dimension exceeds 3");
    std::vector<Factor> factors = A.factors();
    for (const auto& f : B.factors()) factors.push_back(f);
    std::vector<double> scales;
    for (std::size_t i = 0; i < A.factors().size(); ++i) scales.push_back(A.factor_scale(i));
    for (std::size_t i = 0; i < B.factors().size(); ++i) scales.push_back(B.factor_scale(i));
    auto pa = std::make_shared<detail::ShiftedToric>(dim, A.potential_ptr(), 0);
    auto pb = std::make_shared<detail::ShiftedToric>(dim, B.potential_ptr(), A.dim());
    auto pot = std::make_shared<ToricSum>(
        dim, std::vector<std::pair<double, ToricPtr>>{{1.0, pa}, {1.0, pb}});
    int level = std::min(A.radial_level(), B.radial_level());
    // int (wA+wB)^n / n! over the product = (int wA^{nA}/nA!) (int wB^{nB}/nB!)
    return std::make_shared<KahlerModel>(A.name() + "x" + B.name(), factors, scales, pot, level,
                                         /*angular=*/0,
                                         A.volume_normalization() * B.volume_normalization());
}

inline std::shared_ptr<KahlerModel> perturb(const KahlerModel& model, ToricPtr bump,
                                            double epsilon) {
    if (bump->vars() != model.dim())
        throw DomainError("perturb: bump variable count does not match the model");
    ToricPtr pot = model.potential_ptr();
    if (epsilon != 0.0)
        pot = std::make_shared<ToricSum>(
            model.dim(),
            std::vector<std::pair<double, ToricPtr>>{{1.0, pot}, {epsilon, bump}});
    std::vector<double> scales;
    for (std::size_t i = 0; i < model.factors().size(); ++i)
        scales.push_back(model.factor_scale(i));
    return std::make_shared<KahlerModel>(model.name(), model.factors(), scales, pot,
                                         model.radial_level(), model.angular_level(),
                                         model.volume_normalization(), model.volume_tolerance());
}

// ---------------------------------------------------------------------------
// Bump / direction bases

// CP^1: t/(1+t)^m for m = 2..basis_size+1; transverse to the scaling
// automorphism (which is the m = 1 element).
inline std::vector<ToricPtr> cp1_bump_basis(int basis_size) {
    std::vector<ToricPtr> out;
    for (int m = 2; m <= basis_size + 1; ++m)
        out.push_back(std::make_shared<RationalMonomial>(1, std::vector<int>{0},
                                                         std::vector<int>{1}, m));
    return out;
}

// CP^2: monomials in the moment coordinates mu_i = t_i / (1+t1+t2).
inline std::vector<ToricPtr> fs2_bump_basis(int max_deg = 2) {
    std::vector<ToricPtr> out;
    for (int d = 1; d <= max_deg; ++d)
        for (int a = d; a >= 0; --a) {
            int b = d - a;
            out.push_back(std::make_shared<RationalMonomial>(2, std::vector<int>{0, 1},
                                                             std::vector<int>{a, b}, d));
        }
    return out;
}

// Products of per-factor CP^1 bumps for fs1 x fs1.
inline std::vector<ToricPtr> product_bump_basis(int per_factor) {
    std::vector<ToricPtr> out;
    auto b1 = cp1_bump_basis(per_factor);
    for (const auto& f : b1)
        out.push_back(std::make_shared<detail::ShiftedToric>(2, f, 0));
    for (const auto& f : b1)
        out.push_back(std::make_shared<detail::ShiftedToric>(2, f, 1));
    for (const auto& fa : b1)
        for (const auto& fb : b1)
            out.push_back(std::make_shared<DisjointProduct>(
                2, std::make_shared<detail::ShiftedToric>(1, fa, 0), fb, 1));
    return out;
}

} // namespace zlab
