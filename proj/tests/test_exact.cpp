#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "odesign/exact.hpp"
#include "odesign/matrix.hpp"
#include "odesign/pmr.hpp"

using namespace odesign;

namespace {

DenseMatrix random_hermitian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    DenseMatrix m(n);
    for (int r = 0; r < n; ++r) {
        m.at(r, r) = g(rng);
        for (int c = r + 1; c < n; ++c) {
            const Complex v{g(rng), g(rng)};
            m.at(r, c) = v;
            m.at(c, r) = std::conj(v);
        }
    }
    return m;
}

// H = -(P + P^3) + eps P^2 on the 4-cycle permutation
DenseMatrix perm_cycle_matrix(double eps) {
    DenseMatrix m(4);
    for (int z = 0; z < 4; ++z) {
        m.at((z + 1) % 4, z) += -1.0;
        m.at((z + 3) % 4, z) += -1.0;
        m.at((z + 2) % 4, z) += eps;
    }
    return m;
}

}  // namespace

TEST_CASE("pauli z spectrum") {
    DenseMatrix z(2);
    z.at(0, 0) = 1.0;
    z.at(1, 1) = -1.0;
    Spectrum s = diagonalize(z);
    CHECK(s.eigenvalues[0] == doctest::Approx(-1.0));
    CHECK(s.eigenvalues[1] == doctest::Approx(1.0));
}

TEST_CASE("two-level closed form") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double a1 = g(rng), a2 = g(rng), a3 = g(rng);
        DenseMatrix m(2);
        m.at(0, 0) = a3;
        m.at(1, 1) = -a3;
        m.at(0, 1) = Complex{a1, -a2};
        m.at(1, 0) = Complex{a1, a2};
        const double r = std::sqrt(a1 * a1 + a2 * a2 + a3 * a3);
        Spectrum s = diagonalize(m);
        CHECK(s.eigenvalues[0] == doctest::Approx(-r).epsilon(1e-12));
        CHECK(s.eigenvalues[1] == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("perm-cycle spectrum matches (-2+eps, -eps, -eps, 2+eps)") {
    for (double eps : {0.3, 0.7}) {
        Spectrum s = diagonalize(perm_cycle_matrix(eps));
        CHECK(s.eigenvalues[0] == doctest::Approx(-2.0 + eps).epsilon(1e-12));
        CHECK(s.eigenvalues[1] == doctest::Approx(-eps).epsilon(1e-12));
        CHECK(s.eigenvalues[2] == doctest::Approx(-eps).epsilon(1e-12));
        CHECK(s.eigenvalues[3] == doctest::Approx(2.0 + eps).epsilon(1e-12));
    }
}

TEST_CASE("spectral reconstruction and orthonormality on random matrices") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 11);
        DenseMatrix m = random_hermitian(n, rng);
        Spectrum s = diagonalize(m);
        const double norm = frobenius_norm(m);
        // V diag(lambda) V^dag rebuilds the input
        DenseMatrix rebuilt(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Complex acc{};
                for (int k = 0; k < n; ++k)
                    acc += s.eigenvectors.at(i, k) * s.eigenvalues[k] *
                           std::conj(s.eigenvectors.at(j, k));
                rebuilt.at(i, j) = acc;
            }
        CHECK(max_entry_difference(rebuilt, m) < 1e-9 * norm);
        CHECK(unitarity_error(s.eigenvectors) < 1e-10);
        for (int k = 0; k + 1 < n; ++k) CHECK(s.eigenvalues[k] <= s.eigenvalues[k + 1]);
    }
}

TEST_CASE("trace_exp basics") {
    DenseMatrix x(2);
    x.at(0, 1) = 1.0;
    x.at(1, 0) = 1.0;
    CHECK(trace_exp(x, 1.0) == doctest::Approx(2.0 * std::cosh(1.0)).epsilon(1e-12));
    CHECK(trace_exp(x, 0.0) == doctest::Approx(2.0));
    std::mt19937_64 rng(7);
    DenseMatrix m = random_hermitian(5, rng);
    CHECK(trace_exp(m, 0.0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("trace invariance under unitary conjugation") {
    std::mt19937_64 rng(11);
    DenseMatrix m = random_hermitian(6, rng);
    // unitary from the eigenvectors of another random Hermitian matrix
    DenseMatrix u = diagonalize(random_hermitian(6, rng)).eigenvectors;
    DenseMatrix rotated = conjugate_by_unitary(m, u, 1e-9);
    for (double beta : {0.5, 1.0, 2.0}) {
        const double z1 = trace_exp(m, beta);
        const double z2 = trace_exp(rotated, beta);
        CHECK(std::fabs(z1 - z2) / z1 < 1e-10);
    }
}

TEST_CASE("exact_sign of the perm-cycle model matches the closed form") {
    for (double eps : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        PmrHamiltonian h = decompose(perm_cycle_matrix(eps));
        for (double beta : {0.5, 1.0, 2.0, 4.0}) {
            const double got = eps == 0.0 ? exact_sign(decompose(perm_cycle_matrix(0.0)), beta)
                                          : exact_sign(h, beta);
            const double num = 2.0 * std::exp(2.0 * beta * (eps + 1.0)) + std::exp(4.0 * beta) + 1.0;
            const double den = std::exp(2.0 * beta * eps) + std::exp(2.0 * beta * (eps + 2.0)) +
                               2.0 * std::exp(2.0 * beta);
            CHECK(std::fabs(got - num / den) / (num / den) < 1e-10);
        }
    }
    // stoquastic at eps = 0: the ratio is exactly 1
    CHECK(exact_sign(decompose(perm_cycle_matrix(0.0)), 1.7) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trace-ratio sign stays in (0, 1]") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        PmrHamiltonian h = decompose(random_hermitian(n, rng));
        for (double beta : {0.5, 1.5}) {
            const double s = exact_sign(h, beta);
            CHECK(s > 0.0);
            CHECK(s <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("ground state sign classification") {
    // perm-cycle at eps = 0.5: unique ground state (1,1,1,1)
    CHECK(ground_state_sign_class(perm_cycle_matrix(0.5)) == GroundStateSignClass::all_same_sign);
    // eps = 1.5: the doubly degenerate -eps level is the ground space
    CHECK(ground_state_sign_class(perm_cycle_matrix(1.5)) ==
          GroundStateSignClass::degenerate_ambiguous);
    // pauli z: ground vector (0, 1), a single nonzero amplitude
    DenseMatrix z(2);
    z.at(0, 0) = 1.0;
    z.at(1, 1) = -1.0;
    CHECK(ground_state_sign_class(z) == GroundStateSignClass::all_same_sign);
    // explicit mixed-sign ground state
    DenseMatrix x(2);
    x.at(0, 1) = 1.0;
    x.at(1, 0) = 1.0;  // ground vector of +X is (1,-1)/sqrt(2)
    CHECK(ground_state_sign_class(x) == GroundStateSignClass::mixed_sign);
}

TEST_CASE("monotone severity in beta for the perm-cycle model") {
    PmrHamiltonian h = decompose(perm_cycle_matrix(0.5));
    double prev = 1.0;
    for (double beta : {0.5, 1.0, 2.0, 3.0, 4.0}) {
        const double s = exact_sign(h, beta);
        CHECK(s < prev);
        prev = s;
    }
}
