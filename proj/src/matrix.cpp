#include "odesign/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace odesign {

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    const int n = a.dim();
    if (b.dim() != n) throw std::invalid_argument("multiply: dimension mismatch");
    DenseMatrix out(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const Complex aik = a.at(i, k);
            if (aik == Complex{}) continue;
            for (int j = 0; j < n; ++j) out.at(i, j) += aik * b.at(k, j);
        }
    }
    return out;
}

DenseMatrix adjoint(const DenseMatrix& a) {
    const int n = a.dim();
    DenseMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.at(i, j) = std::conj(a.at(j, i));
    return out;
}

double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (const Complex& z : a.data()) s += std::norm(z);
    return std::sqrt(s);
}

double hermiticity_error(const DenseMatrix& a) {
    const int n = a.dim();
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            worst = std::max(worst, std::abs(a.at(i, j) - std::conj(a.at(j, i))));
    return worst;
}

bool is_hermitian(const DenseMatrix& a, double tol) { return hermiticity_error(a) <= tol; }

void require_hermitian(const DenseMatrix& a, double tol) {
    if (!is_hermitian(a, tol))
        throw std::invalid_argument("matrix is not Hermitian within tolerance");
}

double unitarity_error(const DenseMatrix& u) {
    const DenseMatrix p = multiply(u, adjoint(u));
    const int n = u.dim();
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Complex want = i == j ? Complex{1.0} : Complex{};
            worst = std::max(worst, std::abs(p.at(i, j) - want));
        }
    return worst;
}

DenseMatrix conjugate_by_unitary(const DenseMatrix& a, const DenseMatrix& u, double tol) {
    if (u.dim() != a.dim()) throw std::invalid_argument("conjugate_by_unitary: dimension mismatch");
    if (unitarity_error(u) > tol)
        throw std::invalid_argument("conjugate_by_unitary: matrix is not unitary within tolerance");
    return multiply(multiply(u, a), adjoint(u));
}

double max_entry_difference(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("max_entry_difference: dimension mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

}  // namespace odesign
