#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "odesign/divdiff.hpp"
#include "odesign/pmr.hpp"

namespace odesign {

/// An off-diagonal-expansion configuration: a starting basis state and an
/// ordered list of term indices (0-based), applied first-to-last.
struct Configuration {
    int z0{0};
    std::vector<int> sequence;

    int order() const { return static_cast<int>(sequence.size()); }
};

/// The walk induced by a configuration: visited states z_0..z_q, their
/// classical energies, and the product of hopping amplitudes.
struct PathTrace {
    std::vector<int> states;
    std::vector<double> energies;
    Complex amplitude_product{1.0, 0.0};
    double magnitude_product{1.0};  // product of |d|, for zero-weight detection
};

/// Generalized Boltzmann weight of a closed configuration:
/// Re(prod d) * e^{-beta [E_0..E_q]}.
struct Gbw {
    double real_weight{0.0};
    int sign{0};
    double log_magnitude{-std::numeric_limits<double>::infinity()};
    int order{0};
};

PathTrace trace_path(const PmrHamiltonian& h, const Configuration& c);
bool is_closed(const PmrHamiltonian& h, const Configuration& c);

/// Depth-first enumeration of every closed configuration with order <= q_max
/// (one identity configuration per basis state at q = 0). Branches are pruned
/// by the hop-graph return distance to z0.
void enumerate_closed(const PmrHamiltonian& h, int q_max,
                      const std::function<void(const Configuration&)>& visit);
std::vector<Configuration> enumerate_closed(const PmrHamiltonian& h, int q_max);

/// Weight of a closed configuration; throws std::invalid_argument otherwise.
Gbw weight(const PmrHamiltonian& h, const Configuration& c, double beta);

/// Sign of the weight for beta > 0 (independent of the value of beta):
/// sgn(Re prod d) * (-1)^q, with 0 when |Re prod d| <= 1e-12 * prod|d|.
int weight_sign(const PmrHamiltonian& h, const Configuration& c);

enum class SeriesEngine {
    automatic,  // brute when the DFS budget allows, grouped otherwise
    brute,      // enumerate every configuration (exact |W| for any model)
    grouped,    // group paths by (start state, energy histogram); Z exact for
                // any model, |W| mass exact only for real-amplitude models
};

struct SeriesResult {
    double z{0.0};
    double abs_sum{0.0};
    int achieved_q{0};
    bool truncated{false};      // adaptive tail criterion unmet at q_max
    bool abs_sum_exact{true};   // false when abs_sum is the magnitude bound
    std::vector<double> order_z;
    std::vector<double> order_abs;
};

/// Truncated series for Z and Sigma|W|. achieved_q is the smallest order at
/// which the last two orders' |W| mass drops below tail_tol times the
/// accumulated mass, else q_max with the truncation flag set.
SeriesResult series_partition(const PmrHamiltonian& h, double beta, int q_max, double tail_tol,
                              SeriesEngine engine = SeriesEngine::automatic);

/// Sigma W / Sigma |W| over the truncated set. Requires an exact |W| mass
/// (brute scale, or a real-amplitude model); throws InfeasibleError otherwise
/// and std::domain_error when the |W| mass vanishes.
double series_sign(const PmrHamiltonian& h, double beta, int q_max, double tail_tol,
                   SeriesEngine engine = SeriesEngine::automatic);

}  // namespace odesign
