#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "zlab/presets.hpp"
#include "zlab/quantization.hpp"

using namespace zlab;

namespace {

double beta_gram_cp1(int a, int k) {
    // <z^a, z^a> on the round degree-1 sphere: a! (k-a)! / (k+1)!
    return std::exp(std::lgamma(a + 1.0) + std::lgamma(k - a + 1.0) - std::lgamma(k + 2.0));
}

double beta_gram_cp2(int a1, int a2, int k) {
    return std::exp(std::lgamma(a1 + 1.0) + std::lgamma(a2 + 1.0) +
                    std::lgamma(k - a1 - a2 + 1.0) - std::lgamma(k + 3.0));
}

} // namespace

TEST_CASE("section space dimensions") {
    auto m2 = make_fubini_study(2, 1.0, 8);
    CHECK(section_basis(*m2, 3).dim == 10);
    auto m1 = make_fubini_study(1, 1.0, 8, 4);
    CHECK(section_basis(*m1, 5).dim == 6);
    auto p = product_model(*make_fubini_study(1, 1.0, 8, 0), *make_fubini_study(1, 1.0, 8, 0));
    CHECK(section_basis(*p, 2).dim == 9);
    CHECK_THROWS_AS(section_basis(*m1, 0), DomainError);
    auto frac = make_fubini_study(1, 1.5, 8, 4);
    CHECK_THROWS_AS(section_basis(*frac, 2), DomainError);
}

TEST_CASE("gram entries match the beta closed form on round models") {
    auto m1r = make_fubini_study(1, 1.0, 64, 0);  // invariant path
    auto m1e = make_fubini_study(1, 1.0, 64, 64); // dense path
    for (int k : {4, 8, 20}) {
        GramMatrix gr = gram(*m1r, k);
        GramMatrix ge = gram(*m1e, k);
        for (int a = 0; a <= k; ++a) {
            double exact = beta_gram_cp1(a, k);
            CHECK(rel_err(gr.G(a, a).real(), exact) < 1e-10);
            CHECK(rel_err(ge.G(a, a).real(), exact) < 1e-10);
        }
        // off-diagonal entries vanish by angular orthogonality
        double off = 0.0;
        for (int a = 0; a <= k; ++a)
            for (int b = 0; b <= k; ++b)
                if (a != b) off = std::max(off, std::abs(ge.G(a, b)) / ge.G(a, a).real());
        CHECK(off < 1e-13);
    }
    auto m2 = make_fubini_study(2, 1.0, 48);
    SectionBasis b2 = section_basis(*m2, 6);
    GramMatrix g2 = gram(*m2, 6);
    for (int a = 0; a < b2.dim; ++a) {
        double exact = beta_gram_cp2(b2.exps[a][0], b2.exps[a][1], 6);
        CHECK(rel_err(g2.G(a, a).real(), exact) < 1e-10);
    }
}

TEST_CASE("gram is hermitian positive definite on the built-in battery") {
    auto p = product_model(*make_fubini_study(1, 1.0, 48, 0), *make_fubini_study(1, 1.0, 48, 0));
    auto m2 = perturb(*make_fubini_study(2, 1.0, 48), named_bump("mu11", 2), 0.05);
    for (int k : {1, 8, 32}) {
        for (const KahlerModel* m : {p.get(), m2.get()}) {
            GramMatrix gm = gram(*m, k);
            CHECK((gm.G - gm.G.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gm.G);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("constant potential shift rescales the gram by e^{-kc}") {
    auto m = make_fubini_study(1, 1.0, 64, 0);
    double c = 0.37;
    auto mc = perturb(*m, toric_constant(1, 1.0), c);
    int k = 6;
    GramMatrix g0 = gram(*m, k);
    GramMatrix g1 = gram(*mc, k);
    for (int a = 0; a <= k; ++a)
        CHECK(rel_err(g1.G(a, a).real(), std::exp(-k * c) * g0.G(a, a).real()) < 1e-12);
}

TEST_CASE("under-resolved quadrature is rejected with a conditioning error") {
    auto coarse = make_fubini_study(1, 1.0, 3, 8);
    CHECK_THROWS_AS(gram(*coarse, 24), ConditioningError);
}

TEST_CASE("bergman density is constant (k+1)/Vol on the round sphere") {
    auto m = make_fubini_study(1, 1.0, 64, 0);
    for (int k : {4, 16, 32}) {
        ScalarField rho = bergman_density(*m, k);
        for (Eigen::Index i = 0; i < rho.values.size(); ++i)
            CHECK(std::abs(rho.values[i].real() - (k + 1.0)) < 1e-10 * (k + 1.0));
    }
}

TEST_CASE("bergman density integrates to the dimension") {
    auto m2p = perturb(*make_fubini_study(2, 1.0, 48), named_bump("mu1", 2), 0.05);
    auto m1p = perturb(*make_fubini_study(1, 1.0, 64, 16), cp1_bump(2), 0.2);
    for (int k : {3, 8}) {
        ScalarField r2 = bergman_density(*m2p, k);
        CHECK(rel_err(integrate_real(*m2p, r2), section_basis(*m2p, k).dim) < 1e-10);
        ScalarField r1 = bergman_density(*m1p, k);
        CHECK(rel_err(integrate_real(*m1p, r1), k + 1.0) < 1e-10);
        CHECK(r1.values.real().minCoeff() > 0.0);
    }
}

TEST_CASE("bergman density is invariant under basis mixing") {
    auto m = perturb(*make_fubini_study(1, 1.0, 64, 16), cp1_bump(3), 0.15);
    int k = 6;
    SectionBasis basis = section_basis(*m, k);
    SectionData sd = section_values(*m, basis);
    ScalarField rho = bergman_density(*m, k);

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> N01(0.0, 1.0);
    Eigen::MatrixXcd S(basis.dim, basis.dim);
    for (int a = 0; a < basis.dim; ++a)
        for (int b = 0; b < basis.dim; ++b) S(a, b) = cplx(N01(rng), N01(rng));
    S += 3.0 * Eigen::MatrixXcd::Identity(basis.dim, basis.dim);

    Eigen::MatrixXcd V2 = sd.V * S;
    Eigen::MatrixXcd G2 = V2.adjoint() * sd.wdet.asDiagonal() * V2;
    Eigen::MatrixXcd G2inv = G2.inverse();
    for (Eigen::Index x = 0; x < V2.rows(); x += 7) {
        Eigen::VectorXcd v = V2.row(x).transpose();
        double mixed = v.dot(G2inv * v).real();
        CHECK(std::abs(mixed - rho.values[x].real()) < 1e-11 * std::abs(rho.values[x].real()));
    }
}

TEST_CASE("toeplitz of the constant one is the identity") {
    auto m = perturb(*make_fubini_study(1, 1.0, 64, 8), cp1_bump(2), 0.2);
    OperatorMatrix T = toeplitz(*m, 5, field_from_toric(toric_constant(1, 1.0)));
    CHECK((T.A - Eigen::MatrixXcd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("toeplitz trace equals the density-weighted integral of the symbol") {
    auto m = perturb(*make_fubini_study(1, 1.0, 64, 16), cp1_bump(2), 0.15);
    int k = 8;
    FieldFn f = named_field("angular1", 1);
    OperatorMatrix T = toeplitz(*m, k, f);
    ScalarField rho = bergman_density(*m, k);
    auto fv = sample(*m, f);
    ScalarField prod = rho;
    for (Eigen::Index i = 0; i < prod.values.size(); ++i) prod.values[i] *= fv.values[i];
    CHECK(std::abs(T.A.trace() - integrate(*m, prod)) < 1e-10 * (k + 1.0));
}

TEST_CASE("toeplitz of a real symbol is hermitian") {
    auto m = make_fubini_study(1, 1.0, 64, 16);
    OperatorMatrix T = toeplitz(*m, 7, named_field("angular2", 1));
    CHECK((T.A - T.A.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotating the symbol conjugates the toeplitz matrix by phases") {
    auto m = make_fubini_study(1, 1.0, 64, 32);
    int k = 6;
    FieldFn f = named_field("angular1", 1);
    for (double th : {2.0 * M_PI / 32.0, 0.81}) {
        OperatorMatrix T = toeplitz(*m, k, f);
        OperatorMatrix Tr = toeplitz(*m, k, field_rotated(f, 0, th));
        Eigen::VectorXcd phases(k + 1);
        for (int a = 0; a <= k; ++a) phases[a] = std::polar(1.0, a * th);
        Eigen::MatrixXcd U = phases.asDiagonal();
        CHECK((U.adjoint() * T.A * U - Tr.A).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("kostant-souriau operators are skew-hermitian") {
    auto round_m = make_fubini_study(1, 1.0, 64, 16);
    auto pert = perturb(*round_m, cp1_bump(2), 0.2);
    for (const char* name : {"height", "angular1", "pole146"}) {
        for (int k : {4, 8}) {
            for (const KahlerModel* m : {round_m.get(), pert.get()}) {
                OperatorMatrix P = kostant_souriau(*m, k, named_field(name, 1));
                CHECK((P.A + P.A.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
            }
        }
    }
}

TEST_CASE("kostant-souriau of a constant is i k c times the identity") {
    auto m = make_fubini_study(1, 1.0, 64, 8);
    int k = 5;
    double c = 0.77;
    OperatorMatrix P = kostant_souriau(*m, k, field_from_toric(toric_constant(1, c)));
    Eigen::MatrixXcd expect = cplx(0.0, k * c) * Eigen::MatrixXcd::Identity(k + 1, k + 1);
    CHECK((P.A - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotation hamiltonian quantizes to equally spaced imaginary eigenvalues") {
    auto m = make_fubini_study(1, 1.0, 64, 16);
    int k = 8;
    OperatorMatrix P = kostant_souriau(*m, k, named_field("moment", 1));
    // weight decomposition: P(z^a) = i a z^a exactly
    for (int a = 0; a <= k; ++a)
        for (int b = 0; b <= k; ++b) {
            cplx expect = (a == b) ? cplx(0.0, double(a)) : cplx(0.0);
            CHECK(std::abs(P.A(a, b) - expect) < 1e-11);
        }
}

TEST_CASE("tuynman identity: residual is pure quadrature error") {
    auto m = make_fubini_study(1, 1.0, 64, 16);
    CHECK(tuynman_residual(*m, 6, field_from_toric(toric_constant(1, 1.3))) < 1e-13);
    for (int k : {4, 8, 16})
        CHECK(tuynman_residual(*m, k, named_field("height", 1)) < 1e-8);
    auto pert = perturb(*m, cp1_bump(2), 0.15);
    CHECK(tuynman_residual(*pert, 8, named_field("moment", 1)) < 1e-8);
}

TEST_CASE("tuynman residual drops by 10x under quadrature refinement") {
    auto coarse = make_fubini_study(1, 1.0, 64, 16);
    auto fine = make_fubini_study(1, 1.0, 128, 16);
    FieldFn f = named_field("pole146", 1);
    double rc = tuynman_residual(*coarse, 8, f);
    double rf = tuynman_residual(*fine, 8, f);
    CHECK(rc < 1e-8);
    CHECK(rc / std::max(rf, 1e-16) > 10.0);
}

TEST_CASE("donaldson variation: trivial directions") {
    auto m = make_fubini_study(1, 1.0, 64, 0);
    CHECK(donaldson_variation_residual(*m, 8, toric_constant(1, 0.0), 1e-4) < 1e-13);
    // constant direction: both sides equal -k * dim * c exactly
    CHECK(donaldson_variation_residual(*m, 8, toric_constant(1, 1.0), 1e-3) < 1e-9);
}

TEST_CASE("donaldson variation residual is small and O(h^2)") {
    auto m1 = perturb(*make_fubini_study(1, 1.0, 64, 0), cp1_bump(3), 0.1);
    double r = donaldson_variation_residual(*m1, 8, cp1_bump(2), 1e-4);
    CHECK(r < 1e-5);
    double r1 = donaldson_variation_residual(*m1, 8, cp1_bump(2), 8e-3);
    double r2 = donaldson_variation_residual(*m1, 8, cp1_bump(2), 4e-3);
    CHECK(r1 / r2 > 3.0);
    CHECK(r1 / r2 < 5.2);
}

TEST_CASE("moment map shift: trivial weights") {
    auto m = make_fubini_study(1, 1.0, 64, 16);
    FieldFn f = named_field("height", 1);
    FieldFn zero = field_from_toric(toric_constant(1, 0.0));
    CHECK(moment_shift_check(*m, 8, f, zero) < 1e-13);
    FieldFn cg = field_from_toric(toric_constant(1, 0.45));
    CHECK(moment_shift_check(*m, 8, f, cg) < 1e-12);
}

TEST_CASE("moment map shift matches the contraction symbol") {
    auto m = make_fubini_study(1, 1.0, 64, 16);
    FieldFn h = named_field("height", 1);
    CHECK(moment_shift_check(*m, 8, h, h) < 1e-6);
    CHECK(moment_shift_check(*m, 4, named_field("angular1", 1), h) < 1e-6);
}

TEST_CASE("trace expansion: zero hamiltonian gives zero coefficients") {
    auto m = make_fubini_study(1, 1.0, 48, 8);
    auto rep = trace_expansion_check(*m, field_from_toric(toric_constant(1, 0.0)), {4, 6, 8});
    CHECK(std::abs(rep.leading) < 1e-12);
    CHECK(std::abs(rep.subleading) < 1e-12);
}

TEST_CASE("trace expansion recovers the two leading moments") {
    auto m = perturb(*make_fubini_study(1, 1.0, 64, 0), cp1_bump(2), 0.1);
    auto rep = trace_expansion_check(*m, field_from_toric(cp1_height()), {8, 12, 16, 24, 32});
    CHECK(rep.rel_err_leading < 1e-4);
    CHECK(rep.rel_err_subleading < 1e-2);
}
