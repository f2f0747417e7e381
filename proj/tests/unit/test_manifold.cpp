#include <catch2/catch_amalgamated.hpp>

#include "zlab/manifold.hpp"

using namespace zlab;

namespace {

Node synthetic_node(std::initializer_list<cplx> zs) {
    Node nd;
    int i = 0;
    for (cplx z : zs) {
        nd.z[i] = z;
        nd.t[i] = std::norm(z);
        ++i;
    }
    return nd;
}

ToricPtr bump_cp1() {
    // t/(1+t)^2
    return std::make_shared<RationalMonomial>(1, std::vector<int>{0}, std::vector<int>{1}, 2);
}

} // namespace

TEST_CASE("fubini-study metric at the origin is scale * identity") {
    for (double s : {1.0, 0.7, 2.0}) {
        auto pot = FubiniStudyPotential(1, s);
        Node origin = synthetic_node({cplx(0.0)});
        JetTable jt(pot, origin, 2, 1);
        MIdx e{1, 0, 0};
        CHECK(std::abs(jt.j(e, e) - cplx(s)) < 1e-15);
    }
    auto pot2 = FubiniStudyPotential(2, 1.5);
    Node origin2 = synthetic_node({cplx(0.0), cplx(0.0)});
    JetTable jt2(pot2, origin2, 2, 2);
    MIdx e1{1, 0, 0}, e2{0, 1, 0};
    CHECK(std::abs(jt2.j(e1, e1) - cplx(1.5)) < 1e-15);
    CHECK(std::abs(jt2.j(e2, e2) - cplx(1.5)) < 1e-15);
    CHECK(std::abs(jt2.j(e1, e2)) < 1e-15);
}

TEST_CASE("make_fubini_study rejects out-of-range dimension") {
    CHECK_THROWS_AS(make_fubini_study(0, 1.0), DomainError);
    CHECK_THROWS_AS(make_fubini_study(4, 1.0), DomainError);
}

TEST_CASE("quadrature volume matches the class volume") {
    auto m1 = make_fubini_study(1, 1.0);
    CHECK(rel_err(m1->quadrature_volume(), 1.0) < 1e-12);
    auto m1s = make_fubini_study(1, 2.0);
    CHECK(rel_err(m1s->quadrature_volume(), 2.0) < 1e-12);
    auto m2 = make_fubini_study(2, 1.0, 48);
    CHECK(rel_err(m2->quadrature_volume(), 0.5) < 1e-12);
    auto m3 = make_fubini_study(3, 1.0, 20);
    CHECK(rel_err(m3->quadrature_volume(), 1.0 / 6.0) < 1e-12);
}

TEST_CASE("potential jets are conjugate-symmetric exactly as stored") {
    auto model = perturb(*make_fubini_study(2, 1.0, 16), fs2_bump_basis(2)[2], 0.05);
    for (std::size_t i : {std::size_t(0), model->nodes().size() / 2, model->nodes().size() - 1}) {
        JetTable jt = model->jets(i, 6);
        std::vector<std::pair<MIdx, MIdx>> pairs = {
            {{1, 0, 0}, {0, 1, 0}}, {{2, 1, 0}, {1, 1, 0}}, {{3, 0, 0}, {1, 2, 0}},
            {{2, 2, 0}, {1, 1, 0}}, {{1, 1, 0}, {1, 1, 0}}};
        for (auto& [a, b] : pairs) {
            cplx ab = jt.j(a, b);
            cplx ba = jt.j(b, a);
            CHECK(ab == std::conj(ba)); // bitwise
        }
    }
}

TEST_CASE("jet order 6 is available at every node") {
    auto model = make_fubini_study(1, 1.0, 16, 8);
    MIdx a{3, 0, 0}, b{3, 0, 0};
    for (std::size_t i = 0; i < model->nodes().size(); ++i) {
        cplx v = model->jets(i, 6).j(a, b);
        CHECK(std::isfinite(v.real()));
    }
}

TEST_CASE("u1 profile log(1+t) reproduces fubini-study data at matched nodes") {
    auto fs = make_fubini_study(1, 1.0, 32, 16);
    auto u1 = make_u1_sphere(std::static_pointer_cast<const ToricFunction>(
                                 std::make_shared<FubiniStudyPotential>(1, 1.0)),
                             32, 16);
    REQUIRE(fs->nodes().size() == u1->nodes().size());
    for (std::size_t i = 0; i < fs->nodes().size(); i += 37)
        CHECK(std::abs(fs->metric(i).g(0, 0) - u1->metric(i).g(0, 0)) < 1e-15);
}

TEST_CASE("u1 profile with a mild bump stays positive") {
    auto base = std::make_shared<FubiniStudyPotential>(1, 1.0);
    auto prof = std::make_shared<ToricSum>(
        1, std::vector<std::pair<double, ToricPtr>>{{1.0, base}, {0.1, bump_cp1()}});
    auto model = make_u1_sphere(std::static_pointer_cast<const ToricFunction>(prof), 64, 0);
    CHECK(model->dim() == 1);
}

TEST_CASE("u1 profile violating positivity is rejected with the node reported") {
    auto base = std::make_shared<FubiniStudyPotential>(1, 1.0);
    auto prof = std::make_shared<ToricSum>(
        1, std::vector<std::pair<double, ToricPtr>>{{1.0, base}, {4.0, bump_cp1()}});
    CHECK_THROWS_AS(
        make_u1_sphere(std::static_pointer_cast<const ToricFunction>(prof), 64, 0),
        PositivityError);
}

TEST_CASE("product of two spheres") {
    auto a = make_fubini_study(1, 1.0, 40, 0);
    auto b = make_fubini_study(1, 1.0, 40, 0);
    auto p = product_model(*a, *b);
    CHECK(p->dim() == 2);
    CHECK(rel_err(p->quadrature_volume(), 1.0) < 1e-12);
    // block metric: determinant factorizes over the factors
    for (std::size_t i : {std::size_t(5), std::size_t(777)}) {
        const Node& nd = p->nodes()[i];
        double g1 = 1.0 / ((1.0 + nd.t[0]) * (1.0 + nd.t[0]));
        double g2 = 1.0 / ((1.0 + nd.t[1]) * (1.0 + nd.t[1]));
        CHECK(rel_err(p->metric(i).detg, g1 * g2) < 1e-13);
        CHECK(std::abs(p->metric(i).g(0, 1)) < 1e-16);
    }
}

TEST_CASE("perturb with epsilon zero is the identity") {
    auto m = make_fubini_study(1, 1.0, 32, 8);
    auto m0 = perturb(*m, bump_cp1(), 0.0);
    for (std::size_t i = 0; i < m->nodes().size(); i += 23)
        CHECK(m->metric(i).g(0, 0) == m0->metric(i).g(0, 0));
}

TEST_CASE("total volume is invariant under perturb") {
    auto m1 = make_fubini_study(1, 1.0, 64, 0);
    for (double eps : {0.3, -0.2, 0.05}) {
        auto mp = perturb(*m1, bump_cp1(), eps);
        CHECK(std::abs(mp->quadrature_volume() - m1->quadrature_volume()) < 1e-10);
    }
    auto m2 = make_fubini_study(2, 1.0, 48);
    for (const auto& b : fs2_bump_basis(2)) {
        auto mp = perturb(*m2, b, 0.05);
        CHECK(std::abs(mp->quadrature_volume() - m2->quadrature_volume()) < 1e-10 * 0.5);
    }
    auto prod = product_model(*make_fubini_study(1, 1.0, 48, 0), *make_fubini_study(1, 1.0, 48, 0));
    auto basis = product_bump_basis(2);
    auto mp = perturb(*prod, basis.back(), 0.1);
    CHECK(std::abs(mp->quadrature_volume() - prod->quadrature_volume()) < 1e-10);
}

TEST_CASE("cp2 torus-invariant bump at epsilon 0.05 keeps the metric positive") {
    auto m2 = make_fubini_study(2, 1.0, 48);
    for (const auto& b : fs2_bump_basis(2)) CHECK_NOTHROW(perturb(*m2, b, 0.05));
}

TEST_CASE("integrate: constant field gives the volume") {
    auto m = make_fubini_study(1, 1.0);
    auto one = constant_field(*m, 1.0);
    CHECK(rel_err(integrate_real(*m, one), 1.0) < 1e-12);
}

TEST_CASE("integrate matches the beta-function closed form") {
    auto m = make_fubini_study(1, 1.0);
    // f = t^a (1+t)^{-k}; integral over the round sphere:
    // int t^a (1+t)^{-k-2} dt = B(a+1, k+1-a)
    for (auto [a, k] : std::vector<std::pair<int, int>>{{0, 4}, {3, 8}, {10, 20}}) {
        ScalarField f;
        f.model = m.get();
        f.values.resize(static_cast<Eigen::Index>(m->nodes().size()));
        for (std::size_t i = 0; i < m->nodes().size(); ++i) {
            double t = m->nodes()[i].t[0];
            f.values[static_cast<Eigen::Index>(i)] = std::pow(t, a) * std::pow(1.0 + t, -k);
        }
        double exact =
            std::exp(std::lgamma(a + 1.0) + std::lgamma(k + 1.0 - a) - std::lgamma(k + 2.0));
        CHECK(rel_err(integrate_real(*m, f), exact) < 1e-10);
    }
}

TEST_CASE("odd angular modes integrate to zero") {
    auto m = make_fubini_study(1, 1.0);
    auto radial = std::static_pointer_cast<const ToricFunction>(
        std::make_shared<RationalMonomial>(1, std::vector<int>{0}, std::vector<int>{1}, 3));
    auto f = sample(*m, field_angular(0, 1, radial));
    CHECK(std::abs(integrate(*m, f)) < 1e-14);
}

TEST_CASE("integrate is invariant under rotations of the sphere") {
    auto m = make_fubini_study(1, 1.0);
    auto radial = std::static_pointer_cast<const ToricFunction>(
        std::make_shared<RationalMonomial>(1, std::vector<int>{0}, std::vector<int>{2}, 4));
    FieldFn f = field_angular(0, 2, radial);
    cplx base = integrate(*m, sample(*m, f));
    for (double th : {0.3, 1.234, 2 * M_PI / 64.0}) {
        cplx rot = integrate(*m, sample(*m, field_rotated(f, 0, th)));
        CHECK(std::abs(rot - base) < 1e-12);
    }
}

TEST_CASE("doubling the quadrature level moves validation integrals below 1e-12") {
    auto coarse = make_fubini_study(1, 1.0, 64, 0);
    auto fine = make_fubini_study(1, 1.0, 128, 0);
    for (auto [a, k] : std::vector<std::pair<int, int>>{{2, 6}, {8, 20}}) {
        auto eval = [&](const KahlerModel& m) {
            ScalarField f;
            f.model = &m;
            f.values.resize(static_cast<Eigen::Index>(m.nodes().size()));
            for (std::size_t i = 0; i < m.nodes().size(); ++i) {
                double t = m.nodes()[i].t[0];
                f.values[static_cast<Eigen::Index>(i)] = std::pow(t, a) * std::pow(1.0 + t, -k);
            }
            return integrate_real(m, f);
        };
        CHECK(rel_err(eval(*coarse), eval(*fine)) < 1e-12);
    }
}

TEST_CASE("integrate rejects fields from another node set") {
    auto m1 = make_fubini_study(1, 1.0, 32, 8);
    auto m2 = make_fubini_study(1, 1.0, 16, 8);
    auto f = constant_field(*m2, 1.0);
    CHECK_THROWS_AS(integrate(*m1, f), NodeMismatchError);
}

TEST_CASE("finite-difference profile jets track analytic derivatives") {
    FiniteDifferenceProfile fd([](double t) { return std::log(1.0 + t); });
    FubiniStudyPotential exact(1, 1.0);
    double t = 0.8;
    // the h = 1e-2 stencil loses ~eps/h^m to cancellation at high orders
    double tol[7] = {1e-12, 1e-9, 1e-8, 1e-6, 1e-5, 1e-3, 1e-1};
    for (int m = 0; m <= 6; ++m) {
        MIdx g{m, 0, 0};
        double got = fd.t_derivative(g, &t);
        double want = exact.t_derivative(g, &t);
        CHECK(std::abs(got - want) < tol[m] * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("real fields stay real at the nodes") {
    auto m = make_fubini_study(2, 1.0, 24);
    auto f = sample(*m, field_from_toric(fs2_bump_basis(2)[1]));
    for (Eigen::Index i = 0; i < f.values.size(); ++i)
        CHECK(std::abs(f.values[i].imag()) < 1e-12);
}
