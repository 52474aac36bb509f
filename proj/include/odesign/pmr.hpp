#pragma once

#include <vector>

#include "odesign/matrix.hpp"

namespace odesign {

/// Permutation of basis indices, z -> map[z].
struct Permutation {
    std::vector<int> map;

    int dim() const { return static_cast<int>(map.size()); }
    int apply(int z) const { return map[static_cast<std::size_t>(z)]; }
    bool is_identity() const;
    bool is_fixed_point_free() const;
    bool is_bijection() const;
    Permutation inverse() const;

    friend bool operator==(const Permutation&, const Permutation&) = default;
};

/// One off-diagonal PMR term D_j P_j. The diagonal is indexed by the target
/// state: D_j P_j |z> = diag[perm(z)] |perm(z)>.
struct PmrTerm {
    std::vector<Complex> diag;
    Permutation perm;
};

/// H = D0 + sum_j D_j P_j with distinct fixed-point-free permutations P_j.
struct PmrHamiltonian {
    int dim{0};
    std::vector<double> d0;      // classical energies <z|D0|z>
    std::vector<PmrTerm> terms;  // the M off-diagonal terms

    int term_count() const { return static_cast<int>(terms.size()); }
    /// index of the term carrying the inverse permutation of terms[j]
    /// (j itself when the permutation is an involution)
    int partner(int j) const;
};

/// Structural invariants: bijective fixed-point-free distinct permutations,
/// the inverse-permutation partner of every term present with conjugated
/// amplitudes, no all-zero term. Throws std::invalid_argument on violation.
void validate(const PmrHamiltonian& h, double tol = 1e-12);

/// Write a Hermitian matrix in permutation-operator form. Off-diagonal
/// entries are packed greedily into partial permutation patterns (mirrored
/// per unordered index pair so Hermitian partners stay aligned), patterns are
/// completed to fixed-point-free permutations with zero amplitudes, and
/// duplicates merged.
PmrHamiltonian decompose(const DenseMatrix& matrix, double tol = 1e-12);

DenseMatrix recompose(const PmrHamiltonian& h);

/// true iff every off-diagonal entry has real part <= tol and |imag| <= tol
bool is_stoquastic(const DenseMatrix& matrix, double tol = 1e-12);

/// Replace every off-diagonal amplitude d by -|d| (D0 unchanged).
PmrHamiltonian stoquasticize(const PmrHamiltonian& h);

/// d^(j)_{z'} with z' = P_j(z): the amplitude with which term j hops z to z'.
Complex hopping_amplitude(const PmrHamiltonian& h, int term_index, int z);

}  // namespace odesign
