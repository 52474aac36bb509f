#include "odesign/exact.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace odesign {

namespace {

double offdiag_frobenius(const DenseMatrix& a) {
    const int n = a.dim();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) s += std::norm(a.at(i, j));
    return std::sqrt(s);
}

}  // namespace

Spectrum diagonalize(const DenseMatrix& matrix) {
    require_hermitian(matrix, 1e-12);
    const int n = matrix.dim();
    DenseMatrix a = matrix;
    DenseMatrix v = DenseMatrix::identity(n);
    const double norm = frobenius_norm(matrix);
    const double target = std::max(1e-300, 1e-14 * norm);

    for (int sweep = 0; sweep < 100 && offdiag_frobenius(a) > target; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const Complex apq = a.at(p, q);
                if (std::abs(apq) == 0.0) continue;
                const double app = a.at(p, p).real();
                const double aqq = a.at(q, q).real();
                // unitary 2x2 rotation built from the real Jacobi angle of
                // [[app, |apq|], [|apq|, aqq]] and the phase of apq
                const Complex phase = apq / std::abs(apq);
                const double tau = (aqq - app) / (2.0 * std::abs(apq));
                // smaller-magnitude root of t^2 - 2 tau t - 1 = 0
                const double t = (tau >= 0.0 ? -1.0 : 1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // columns: |p> <- c|p> + s*conj(phase)|q>, |q> <- -s*phase|p> + c|q>
                const Complex sp = s * phase;
                const Complex spc = s * std::conj(phase);
                for (int i = 0; i < n; ++i) {
                    const Complex aip = a.at(i, p);
                    const Complex aiq = a.at(i, q);
                    a.at(i, p) = c * aip + spc * aiq;
                    a.at(i, q) = -sp * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const Complex api = a.at(p, i);
                    const Complex aqi = a.at(q, i);
                    a.at(p, i) = c * api + sp * aqi;
                    a.at(q, i) = -spc * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const Complex vip = v.at(i, p);
                    const Complex viq = v.at(i, q);
                    v.at(i, p) = c * vip + spc * viq;
                    v.at(i, q) = -sp * vip + c * viq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = a.at(i, i).real();
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return eig[x] < eig[y]; });

    Spectrum out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n);
    for (int k = 0; k < n; ++k) {
        out.eigenvalues[k] = eig[order[k]];
        for (int i = 0; i < n; ++i) out.eigenvectors.at(i, k) = v.at(i, order[k]);
    }
    return out;
}

double trace_exp(const DenseMatrix& matrix, double beta) {
    if (beta < 0.0) throw std::invalid_argument("trace_exp: beta must be nonnegative");
    const Spectrum s = diagonalize(matrix);
    double z = 0.0;
    for (double lam : s.eigenvalues) z += std::exp(-beta * lam);
    return z;
}

double exact_sign(const PmrHamiltonian& h, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("exact_sign: beta must be positive");
    const double z = trace_exp(recompose(h), beta);
    const double zs = trace_exp(recompose(stoquasticize(h)), beta);
    return z / zs;
}

const char* to_string(GroundStateSignClass c) {
    switch (c) {
        case GroundStateSignClass::all_same_sign: return "all_same_sign";
        case GroundStateSignClass::mixed_sign: return "mixed_sign";
        case GroundStateSignClass::degenerate_ambiguous: return "degenerate_ambiguous";
    }
    return "?";
}

GroundStateSignClass ground_state_sign_class(const DenseMatrix& matrix) {
    const Spectrum s = diagonalize(matrix);
    const int n = matrix.dim();
    const double norm = frobenius_norm(matrix);
    const double degeneracy_tol = 1e-9 * std::max(norm, 1e-300);
    if (n > 1 && s.eigenvalues[1] - s.eigenvalues[0] <= degeneracy_tol)
        return GroundStateSignClass::degenerate_ambiguous;

    std::vector<Complex> g(n);
    for (int i = 0; i < n; ++i) g[i] = s.eigenvectors.at(i, 0);
    int imax = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(g[i]) > std::abs(g[imax])) imax = i;
    const Complex rot = std::conj(g[imax]) / std::abs(g[imax]);
    for (Complex& c : g) c *= rot;

    constexpr double zero_tol = 1e-10;
    bool positive = false, negative = false, complex_residue = false;
    for (const Complex& c : g) {
        if (std::abs(c) <= zero_tol) continue;
        if (std::fabs(c.imag()) > zero_tol) complex_residue = true;
        if (c.real() > zero_tol) positive = true;
        if (c.real() < -zero_tol) negative = true;
    }
    if (complex_residue || (positive && negative)) return GroundStateSignClass::mixed_sign;
    return GroundStateSignClass::all_same_sign;
}

}  // namespace odesign
