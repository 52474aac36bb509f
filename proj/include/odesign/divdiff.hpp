#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "odesign/ddreal.hpp"

namespace odesign {

/// Multiset of classical energies together with the inverse temperature;
/// the argument of e^{-beta[x0,...,xq]}. Inputs may repeat arbitrarily.
struct EnergyMultiset {
    std::vector<double> inputs;
    double beta{1.0};
};

/// Divided difference of F(x) = e^{-beta x} in sign / log-magnitude form.
/// `value` is the plain double and may flush to 0 or inf out of range, in
/// which case `sign` and `log_magnitude` remain authoritative.
struct DdValue {
    double value{0.0};
    int sign{0};                 // -1, 0, +1
    double log_magnitude{0.0};   // log|value|; -inf when sign == 0
    bool used_fallback{false};   // Taylor stage escalated to the recursion
    bool degraded{false};        // even the fallback could not certify the value
};

/// Evaluate e^{-beta[x0,...,xq]} (production path: mean shift, then Taylor
/// summation of the shifted problem in compensated double-double arithmetic,
/// escalating to the extended-precision recursion if the tail or the
/// cancellation budget fails).
double dd_exp(std::span<const double> inputs, double beta);
DdValue dd_exp_detailed(std::span<const double> inputs, double beta);

/// Cross-validation oracle: the two-sided recursion on sorted inputs in long
/// double, with a confluent derivative branch for inputs closer than 1e-12.
double dd_exp_recursive(std::span<const double> inputs, double beta);
DdValue dd_exp_recursive_detailed(std::span<const double> inputs, double beta);

/// Partial Taylor sum: e^{-beta*mean} * sum_{n<terms} (-beta)^n [u0..uq]^n / n!
/// over mean-shifted inputs u, where [u..]^n is the divided difference of the
/// monomial x^n (a complete homogeneous symmetric polynomial).
double dd_exp_taylor(std::span<const double> inputs, double beta, int terms);

/// Incremental divided-difference state. Value-semantic: extend/remove
/// mutate this table; table_extend/table_remove below return fresh copies.
///
/// Internally keeps g_k = h_k(t_0..t_q) / (q+k)! over the shifted, scaled
/// inputs t_i = -beta*(E_i - shift), so that the value is
/// (-beta)^q e^{-beta*shift} * sum_k g_k, every g_k is bounded by e^R/q!,
/// and appending or removing one input is a single O(K) pass.
class DivDiffTable {
  public:
    DivDiffTable(std::vector<double> energies, double beta);
    explicit DivDiffTable(const EnergyMultiset& m) : DivDiffTable(m.inputs, m.beta) {}

    std::size_t size() const { return energies_.size(); }
    int order() const { return static_cast<int>(energies_.size()) - 1; }
    double beta() const { return beta_; }
    double shift() const { return shift_; }
    const std::vector<double>& energies() const { return energies_; }

    void extend(double energy);
    void remove(std::size_t position);
    /// Remove the first input exactly equal to `energy`; false if absent.
    bool remove_value(double energy);

    const DdValue& value() const;

  private:
    void rebuild();
    void push_shifted(double t, std::size_t q_new);
    void drop_shifted(double t, std::size_t q_old);
    void evaluate() const;

    std::vector<double> energies_;
    double beta_{1.0};
    double shift_{0.0};        // mean of the inputs at the last rebuild
    double deviation_cap_{4};  // |(-beta)(E - shift)| beyond this forces a rebuild
    std::vector<detail::DD> g_;
    mutable DdValue cached_{};
    mutable bool dirty_{true};
};

DivDiffTable table_extend(const DivDiffTable& table, double energy);
DivDiffTable table_remove(const DivDiffTable& table, std::size_t position);

}  // namespace odesign
