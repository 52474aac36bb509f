#pragma once

#include <vector>

#include "odesign/matrix.hpp"
#include "odesign/pmr.hpp"

namespace odesign {

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvector columns.
struct Spectrum {
    std::vector<double> eigenvalues;
    DenseMatrix eigenvectors;
};

/// Cyclic complex Jacobi rotations, iterated until the off-diagonal
/// Frobenius mass drops below 1e-14 * ||H||. Deterministic sweep order.
Spectrum diagonalize(const DenseMatrix& matrix);

/// Tr e^{-beta H} from the spectrum.
double trace_exp(const DenseMatrix& matrix, double beta);

/// Tr e^{-beta H} / Tr e^{-beta H_s} with H_s the stoquasticized model.
double exact_sign(const PmrHamiltonian& h, double beta);

enum class GroundStateSignClass { all_same_sign, mixed_sign, degenerate_ambiguous };

const char* to_string(GroundStateSignClass c);

/// Classify the ground-state amplitude signs after fixing the global phase
/// (largest-magnitude component rotated to the positive real axis).
/// Amplitudes below 1e-10 count as zero; a degenerate ground space (within
/// 1e-9 * ||H||) is reported as ambiguous.
GroundStateSignClass ground_state_sign_class(const DenseMatrix& matrix);

}  // namespace odesign
