#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gridcoher/controllers.hpp"
#include "gridcoher/error.hpp"
#include "gridcoher/netmodel.hpp"
#include "oracles.hpp"

using namespace gridcoher;

namespace {

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& U, std::size_t blocks, std::size_t tail) {
    const auto n = U.rows();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n * static_cast<Eigen::Index>(blocks) + static_cast<Eigen::Index>(tail),
                                              n * static_cast<Eigen::Index>(blocks) + static_cast<Eigen::Index>(tail));
    for (std::size_t b = 0; b < blocks; ++b) T.block(n * static_cast<Eigen::Index>(b), n * static_cast<Eigen::Index>(b), n, n) = U;
    for (std::size_t t = 0; t < tail; ++t) {
        const auto k = n * static_cast<Eigen::Index>(blocks) + static_cast<Eigen::Index>(t);
        T(k, k) = 1.0;
    }
    return T;
}

std::vector<ControllerSpec> all_controllers(std::size_t n) {
    return {Droop{}, Capi{0.7}, make_dapi(n, 1.3, 0.4), make_depi(n, 0.9)};
}

} // namespace

TEST(Assemble, DroopTwoBusByHand) {
    const auto sys = assemble(make_graph(GraphFamily::Path, 2, 1.0, 0), GeneratorParams::uniform(2, 1.0, 1.0), Droop{});
    Eigen::Matrix4d expected;
    expected << 0, 0, 1, 0,
                0, 0, 0, 1,
               -1, 1, -1, 0,
                1, -1, 0, -1;
    EXPECT_EQ(sys.A, Eigen::MatrixXd(expected));
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 2);
    B.bottomRows(2).setIdentity();
    EXPECT_EQ(sys.B_in, B);
}

TEST(Assemble, StateDimensions) {
    const std::size_t n = 5;
    const auto g = make_graph(GraphFamily::Ring, n, 1.0, 0);
    const auto p = GeneratorParams::uniform(n, 2.0, 0.5);
    EXPECT_EQ(assemble(g, p, Droop{}).layout.dim(), 2 * n);
    EXPECT_EQ(assemble(g, p, Capi{1.0}).layout.dim(), 2 * n + 1);
    EXPECT_EQ(assemble(g, p, make_dapi(n, 1.0, 0.3)).layout.dim(), 3 * n);
    EXPECT_EQ(assemble(g, p, make_depi(n, 1.0)).layout.dim(), 3 * n);
}

TEST(Assemble, OutputActsOnlyOnOmega) {
    const std::size_t n = 4;
    const auto g = make_graph(GraphFamily::Path, n, 1.0, 0);
    const auto p = GeneratorParams::uniform(n, 1.0, 1.0);
    const Eigen::MatrixXd J = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    const Eigen::MatrixXd expected = (Eigen::MatrixXd::Identity(n, n) - J) / std::sqrt(4.0);
    for (const auto& c : all_controllers(n)) {
        const auto sys = assemble(g, p, c);
        EXPECT_EQ(sys.C.rows(), static_cast<Eigen::Index>(n));
        EXPECT_LE((sys.C.middleCols(n, n) - expected).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_EQ(sys.C.leftCols(n).cwiseAbs().maxCoeff(), 0.0);
        if (sys.C.cols() > static_cast<Eigen::Index>(2 * n))
            EXPECT_EQ(sys.C.rightCols(sys.C.cols() - 2 * n).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Assemble, DapiAtZeroGammaEqualsDepi) {
    std::mt19937_64 rng(3);
    const auto g = oracle::random_connected_graph(7, rng, 0.3);
    const GeneratorParams p{{1, 2, 3, 1, 2, 3, 1}, {0.5, 1, 1.5, 2, 0.5, 1, 1.5}, 0.0};
    const std::vector<double> q{0.3, 0.6, 0.9, 1.2, 1.5, 1.8, 2.1};
    const auto a = assemble(g, p, Dapi{q, 0.0, std::nullopt});
    const auto b = assemble(g, p, Depi{q});
    EXPECT_EQ(a.A, b.A);
    EXPECT_EQ(a.B_in, b.B_in);
    EXPECT_EQ(a.C, b.C);
}

TEST(Assemble, CapiIntegratorColumnAndRow) {
    const std::size_t n = 4;
    const GeneratorParams p{{1, 2, 4, 8}, {1, 1, 1, 1}, 0.0};
    const double q = 2.5;
    const auto sys = assemble(make_graph(GraphFamily::Ring, n, 1.0, 0), p, Capi{q});
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_EQ(sys.A(static_cast<Eigen::Index>(n + i), 2 * n), -1.0 / p.m[i]);
        EXPECT_EQ(sys.A(2 * n, static_cast<Eigen::Index>(n + i)), 1.0 / (q * n));
        EXPECT_EQ(sys.A(static_cast<Eigen::Index>(i), 2 * n), 0.0);
    }
    EXPECT_EQ(sys.A(2 * n, 2 * n), 0.0);
}

TEST(Assemble, DapiIntegratorRows) {
    std::mt19937_64 rng(8);
    const std::size_t n = 6;
    const auto g = oracle::random_connected_graph(n, rng, 0.4);
    const auto L = build_laplacian(g);
    const auto p = GeneratorParams::uniform(n, 1.5, 0.8);
    const std::vector<double> q{1, 2, 3, 4, 5, 6};
    const double gamma = 0.7;
    const auto sys = assemble(g, p, Dapi{q, gamma, std::nullopt});
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(2 * n + i);
        for (std::size_t j = 0; j < n; ++j) {
            const auto c = static_cast<Eigen::Index>(j);
            EXPECT_EQ(sys.A(r, c), 0.0);
            EXPECT_EQ(sys.A(r, static_cast<Eigen::Index>(n) + c), i == j ? 1.0 / q[i] : 0.0);
            EXPECT_NEAR(sys.A(r, static_cast<Eigen::Index>(2 * n) + c), -gamma * L(static_cast<Eigen::Index>(i), c) / q[i],
                        1e-15);
            EXPECT_EQ(sys.A(static_cast<Eigen::Index>(n + i), static_cast<Eigen::Index>(2 * n) + c),
                      i == j ? -1.0 / 1.5 : 0.0);
        }
    }
}

TEST(Assemble, ExplicitCommunicationLaplacian) {
    const std::size_t n = 4;
    const auto g = make_graph(GraphFamily::Ring, n, 1.0, 0);
    const auto p = GeneratorParams::uniform(n, 1.0, 1.0);
    const Eigen::MatrixXd Lc = 0.3 * build_laplacian(g);
    const auto a = assemble(g, p, Dapi{std::vector<double>(n, 1.0), 0.0, Lc});
    const auto b = assemble(g, p, make_dapi(n, 1.0, 0.3));
    EXPECT_LE((a.A - b.A).cwiseAbs().maxCoeff(), 1e-15);

    EXPECT_THROW(assemble(g, p, Dapi{std::vector<double>(n, 1.0), 0.0, Eigen::MatrixXd::Zero(3, 3)}), Error);
    try {
        assemble(g, p, Dapi{std::vector<double>(n, 1.0), 0.0, Eigen::MatrixXd(build_laplacian(make_graph(GraphFamily::Path, 3, 1.0, 0)))});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Dimension);
    }
}

TEST(Assemble, RejectsNonPositiveParameters) {
    const std::size_t n = 3;
    const auto g = make_graph(GraphFamily::Path, n, 1.0, 0);
    const auto ok = GeneratorParams::uniform(n, 1.0, 1.0);
    auto expect_parameter_error = [](auto&& f) {
        try {
            f();
            ADD_FAILURE() << "no error";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Parameter) << e.what();
        }
    };
    expect_parameter_error([&] { assemble(g, GeneratorParams::uniform(n, 0.0, 1.0), Droop{}); });
    expect_parameter_error([&] { assemble(g, GeneratorParams::uniform(n, 1.0, -1.0), Droop{}); });
    expect_parameter_error([&] { assemble(g, ok, Capi{0.0}); });
    expect_parameter_error([&] { assemble(g, ok, make_dapi(n, -1.0, 0.3)); });
    expect_parameter_error([&] { assemble(g, ok, make_dapi(n, 1.0, -0.3)); });
    expect_parameter_error([&] { assemble(g, ok, make_depi(n, 0.0)); });
    try {
        assemble(g, GeneratorParams::uniform(n + 1, 1.0, 1.0), Droop{});
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Dimension);
    }
}

TEST(GeneratorParams, UniformFlag) {
    EXPECT_TRUE(GeneratorParams::uniform(4, 2.0, 3.0).is_uniform());
    EXPECT_FALSE((GeneratorParams{{1, 1, 1.001}, {1, 1, 1}, 0}).is_uniform());
    EXPECT_FALSE((GeneratorParams{{1, 1, 1}, {1, 2, 1}, 0}).is_uniform());
}

TEST(MarginalModes, SingleUnobservableZeroForUniformParameters) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(trial) * 4;
        const auto g = oracle::random_connected_graph(n, rng, 0.3);
        const auto p = GeneratorParams::uniform(n, 1.0, 1.0);
        for (const ControllerSpec& c : {ControllerSpec{Droop{}}, ControllerSpec{Capi{1.0}}, make_dapi(n, 1.0, 0.5)}) {
            const auto modes = unobservable_marginal_modes(assemble(g, p, c));
            ASSERT_EQ(modes.size(), 1u) << variant_name(c) << " n=" << n;
            EXPECT_LE(std::abs(modes[0].eigenvalue), 1e-9);
            EXPECT_LE(modes[0].residual, 1e-9);
            EXPECT_FALSE(modes[0].observable());
        }
    }
}

TEST(MarginalModes, DepiHasConservedQuantitiesThatStayHidden) {
    const std::size_t n = 5;
    const auto sys = assemble(make_graph(GraphFamily::Ring, n, 1.0, 0), GeneratorParams::uniform(n, 1.0, 1.0),
                              make_depi(n, 1.0));
    const auto modes = unobservable_marginal_modes(sys);
    EXPECT_EQ(modes.size(), n);
    for (const auto& m : modes) EXPECT_LE(m.residual, 1e-9);
    EXPECT_NO_THROW(require_unobservable_marginal_modes(sys));
}

TEST(MarginalModes, ObservableMarginalModeIsFatal) {
    // A free integrator on one omega entry: a pure drift that y sees.
    const std::size_t n = 2;
    auto sys = assemble(make_graph(GraphFamily::Path, n, 1.0, 0), GeneratorParams::uniform(n, 1.0, 1.0), Droop{});
    sys.A.setZero();
    const auto modes = unobservable_marginal_modes(sys);
    bool any_observable = false;
    for (const auto& m : modes) any_observable = any_observable || m.observable();
    EXPECT_TRUE(any_observable);
    try {
        require_unobservable_marginal_modes(sys);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Stability);
        EXPECT_NE(std::string(e.what()).find("observable marginal mode"), std::string::npos);
    }
}

TEST(Assemble, EigenvaluesInClosedLeftHalfPlane) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.3, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 4 + static_cast<std::size_t>(trial);
        const auto g = oracle::random_connected_graph(n, rng, 0.3);
        GeneratorParams p;
        for (std::size_t i = 0; i < n; ++i) {
            p.m.push_back(u(rng));
            p.d.push_back(u(rng));
        }
        std::vector<double> q(n);
        for (auto& v : q) v = u(rng);
        for (const ControllerSpec& c : {ControllerSpec{Droop{}}, ControllerSpec{Capi{u(rng)}},
                                        ControllerSpec{Dapi{q, u(rng), std::nullopt}}, ControllerSpec{Depi{q}}}) {
            const auto sys = assemble(g, p, c);
            const Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A);
            EXPECT_LE(es.eigenvalues().real().maxCoeff(), 1e-9) << variant_name(c);
            EXPECT_NO_THROW(require_unobservable_marginal_modes(sys)) << variant_name(c);
        }
    }
}

TEST(Assemble, PermutationActsBlockwise) {
    std::mt19937_64 rng(31);
    const std::size_t n = 6;
    const auto g = oracle::random_connected_graph(n, rng, 0.4);
    const GeneratorParams p{{1, 2, 3, 4, 5, 6}, {0.6, 0.5, 0.4, 0.3, 0.2, 0.1}, 0.0};
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    Eigen::MatrixXd Pi = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) Pi(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(i)) = 1.0;

    const std::vector<double> q{1, 1.5, 2, 2.5, 3, 3.5};
    for (const ControllerSpec& c : {ControllerSpec{Droop{}}, ControllerSpec{Capi{2.0}},
                                    ControllerSpec{Dapi{q, 0.4, std::nullopt}}, ControllerSpec{Depi{q}}}) {
        const auto base = assemble(g, p, c);
        const auto moved = assemble(g.permuted(perm), p.permuted(perm), permuted(c, perm));
        const std::size_t blocks = base.layout.z_size == n ? 3 : 2;
        const auto T = block_diag(Pi, blocks, base.layout.z_size == 1 ? 1 : 0);
        EXPECT_LE((moved.A - T * base.A * T.transpose()).cwiseAbs().maxCoeff(), 1e-14) << variant_name(c);
        EXPECT_LE((moved.B_in - T * base.B_in * Pi.transpose()).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LE((moved.C - Pi * base.C * T.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(ModalBlocks, TransformedSystemIsBlockDiagonal) {
    std::mt19937_64 rng(41);
    const std::size_t n = 8;
    const auto g = oracle::random_connected_graph(n, rng, 0.3);
    const auto L = build_laplacian(g);
    const auto s = spectrum(L);
    const double m = 1.7, d = 0.6;
    const auto p = GeneratorParams::uniform(n, m, d);

    for (const ControllerSpec& c : {ControllerSpec{Droop{}}, ControllerSpec{Capi{1.2}}, make_dapi(n, 1.2, 0.4),
                                    make_depi(n, 1.2)}) {
        const auto sys = assemble(g, p, c);
        const std::size_t blocks = sys.layout.z_size == n ? 3 : 2;
        const auto T = block_diag(s.eigenbasis, blocks, sys.layout.z_size == 1 ? 1 : 0);
        const Eigen::MatrixXd Abar = T.transpose() * sys.A * T;
        const Eigen::MatrixXd Bbar = T.transpose() * sys.B_in * s.eigenbasis;
        const Eigen::MatrixXd Cbar = s.eigenbasis.transpose() * sys.C * T;
        const auto gains = uniform_gains(c, L);

        auto mode_of = [&](Eigen::Index k) -> Eigen::Index {
            return k < static_cast<Eigen::Index>(blocks * n) ? k % static_cast<Eigen::Index>(n) : 0;
        };
        // Cross-mode couplings vanish.
        for (Eigen::Index r = 0; r < Abar.rows(); ++r)
            for (Eigen::Index col = 0; col < Abar.cols(); ++col)
                if (mode_of(r) != mode_of(col)) EXPECT_NEAR(Abar(r, col), 0.0, 1e-9) << variant_name(c);

        for (std::size_t i = 1; i < n; ++i) {
            const auto block = modal_block(c, gains, s.eigenvalues(static_cast<Eigen::Index>(i)), m, d, n);
            const auto size = static_cast<Eigen::Index>(blocks);
            ASSERT_EQ(block.A.rows(), size);
            for (Eigen::Index a = 0; a < size; ++a) {
                const auto ra = a * static_cast<Eigen::Index>(n) + static_cast<Eigen::Index>(i);
                EXPECT_NEAR(Bbar(ra, static_cast<Eigen::Index>(i)), block.B(a), 1e-12);
                EXPECT_NEAR(Cbar(static_cast<Eigen::Index>(i), ra), block.C(a), 1e-12);
                for (Eigen::Index b = 0; b < size; ++b) {
                    const auto cb = b * static_cast<Eigen::Index>(n) + static_cast<Eigen::Index>(i);
                    EXPECT_NEAR(Abar(ra, cb), block.A(a, b), 1e-9) << variant_name(c) << " mode " << i;
                }
            }
        }
    }
}

TEST(ModalBlocks, DroopAndCapiAgreeBeyondFirstMode) {
    const UniformGains droop{0.0, 0.0};
    const UniformGains capi{2.0, 0.0};
    for (double lambda : {0.1, 1.0, 7.5}) {
        const auto a = modal_block(Droop{}, droop, lambda, 1.3, 0.4, 6);
        const auto b = modal_block(Capi{2.0}, capi, lambda, 1.3, 0.4, 6);
        EXPECT_EQ(a.A, b.A);
        EXPECT_EQ(a.B, b.B);
        EXPECT_EQ(a.C, b.C);
    }
}

TEST(UniformGains, ProportionalCommunicationGraph) {
    const std::size_t n = 5;
    const auto L = build_laplacian(make_graph(GraphFamily::Ring, n, 2.0, 0));
    const auto gains = uniform_gains(Dapi{std::vector<double>(n, 0.8), 0.0, Eigen::MatrixXd(0.25 * L)}, L);
    EXPECT_NEAR(gains.gamma, 0.25, 1e-14);
    EXPECT_EQ(gains.q, 0.8);

    const Eigen::MatrixXd other = build_laplacian(make_graph(GraphFamily::Complete, n, 1.0, 0));
    try {
        uniform_gains(Dapi{std::vector<double>(n, 0.8), 0.0, other}, L);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Assumption);
    }
    try {
        uniform_gains(Dapi{{1, 1, 1, 1, 2}, 0.3, std::nullopt}, L);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Assumption);
    }
}
