#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace odesign {

using Complex = std::complex<double>;

/// Dense square complex matrix, row-major. Hermiticity is validated at the
/// operations that require it rather than enforced by the type.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    explicit DenseMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n) {}

    int dim() const { return n_; }
    Complex& at(int r, int c) { return a_[static_cast<std::size_t>(r) * n_ + c]; }
    const Complex& at(int r, int c) const { return a_[static_cast<std::size_t>(r) * n_ + c]; }

    static DenseMatrix identity(int n);

    const std::vector<Complex>& data() const { return a_; }

  private:
    int n_{0};
    std::vector<Complex> a_;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix adjoint(const DenseMatrix& a);

double frobenius_norm(const DenseMatrix& a);
/// max |a_rc - conj(a_cr)| over all entries
double hermiticity_error(const DenseMatrix& a);
bool is_hermitian(const DenseMatrix& a, double tol = 1e-12);
/// max |(U U^dag - I)_rc|
double unitarity_error(const DenseMatrix& u);

/// throws std::invalid_argument when the matrix is not Hermitian to tol
void require_hermitian(const DenseMatrix& a, double tol = 1e-12);

/// U a U^dag; throws std::invalid_argument when u is not unitary to tol
DenseMatrix conjugate_by_unitary(const DenseMatrix& a, const DenseMatrix& u, double tol = 1e-12);

double max_entry_difference(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace odesign
