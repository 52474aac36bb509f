#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "odesign/pmr.hpp"

namespace odesign {

struct QubitModelParams {
    double alpha0{0.0}, alpha1{0.0}, alpha2{0.0}, alpha3{0.0};
};

struct QutritModelParams {
    double phi{0.0};
    double j{1.0};  // excited-state energy, must be > 0
};

struct LatticeParams {
    int n_sites{0};
    std::vector<std::tuple<int, int, double>> couplings;  // (i, j, J_ij)
    std::vector<double> fields;                           // h_j per site
    double gamma{0.0};
    std::vector<std::pair<int, int>> edges;               // transverse two-body edges
    std::optional<std::vector<int>> bipartition;          // 0/1 coloring per site
};

struct PermCycleParams {
    double epsilon{0.0};
};

/// alpha0 1 + alpha1 X + alpha2 Y + alpha3 Z in permutation-operator form:
/// D0 = alpha0 + alpha3 Z, one bit-flip term with D1 = alpha1 - i alpha2 Z.
PmrHamiltonian single_qubit(const QubitModelParams& p);

/// e^{i phi} P1 + e^{-i phi} P2 + J diag(0,1,0) on the basis (g1, e, g2),
/// with P1 the 3-cycle 0->1->2->0 and P2 = P1^2.
PmrHamiltonian qutrit(const QutritModelParams& p);

/// The phases in [0, 2pi) at which the qutrit model is sign-problem free.
std::array<double, 3> qutrit_sign_free_angles();

/// Sign of the closed-path weight with n1 P1-hops and n2 P2-hops:
/// sgn[(-1)^{n1+n2} cos((n1-n2) phi)], 0 when the cosine vanishes (within
/// 1e-12). Requires the closure condition (n1 + 2 n2) mod 3 = 0.
int qutrit_weight_sign_formula(int n1, int n2, double phi);

/// Sign of the amplitude product alone, sgn[cos((n1-n2) phi)] — the weight
/// sign without the (-1)^q divided-difference parity. Kept alongside the
/// full formula because the two differ at odd q.
int qutrit_amplitude_sign(int n1, int n2, double phi);

/// sum_s D0^s + sum_edges (e^{i phi} P1^i P2^j + e^{-i phi} P1^j P2^i) on
/// 3^n_sites states, little-endian site digits. site_diag[s] is the per-site
/// classical triple (energy of digit 0/1/2). Capped at n_sites <= 8.
PmrHamiltonian multi_qutrit(int n_sites, const std::vector<std::pair<int, int>>& edges, double phi,
                            const std::vector<std::array<double, 3>>& site_diag);

/// sum J_ij Z_i Z_j + sum h_j Z_j + gamma sum X_j, capped at 10 sites.
/// Spin convention: bit 0 of the basis index means s = +1.
PmrHamiltonian tfim(const LatticeParams& p);

/// sum J_ij Z_i Z_j + gamma sum_edges X_i X_j; the edge set must be
/// two-colorable (a bipartition may be supplied, otherwise it is derived).
/// Per-site fields, when present, enter the diagonal.
PmrHamiltonian xx_bipartite(const LatticeParams& p);

/// -(P + P^3) + eps P^2 on the 4-cycle P: z -> z+1 mod 4.
PmrHamiltonian perm_cycle(const PermCycleParams& p);

/// (2 e^{2b(e+1)} + e^{4b} + 1) / (e^{2be} + e^{2b(e+2)} + 2 e^{2b})
double perm_cycle_sign_closed_form(double epsilon, double beta);

// --- CLI-facing parsing ----------------------------------------------------

/// Decimal radians or exact rational multiples of pi ("pi/3", "2pi/3",
/// "-pi", "0.5pi", "2*pi/3").
double parse_angle(const std::string& token);

struct ParsedModel {
    std::string descriptor;  // the spec string as given
    PmrHamiltonian h;
};

/// qubit:a0,a1,a2,a3 | qutrit:phi,J | multiqutrit:<edge-file>,phi,J |
/// tfim:<lattice-file>,gamma | xx:<lattice-file>,gamma | permcycle:eps |
/// file:<dense-matrix-path>
ParsedModel parse_model_spec(const std::string& spec);

/// Lattice/edge file: `i j J_ij` per line, `h i value` field lines,
/// `#` comments.
LatticeParams load_lattice_file(const std::string& path);

/// Dense matrix file: first line n, then `row col re im` lines.
DenseMatrix load_dense_matrix(const std::string& path);
void write_dense_matrix(std::ostream& out, const DenseMatrix& m);

}  // namespace odesign
