#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "odesign/pmr.hpp"

namespace odesign {

struct SamplerParams {
    double beta{1.0};
    std::uint64_t n_samples{100000};  // total retained samples across chains
    int n_chains{8};
    std::uint64_t burn_in{2000};  // per-chain updates before sampling starts
    int thinning{1};              // updates between retained samples
    std::uint64_t seed{1};
    int q_cap{30};
    int threads{1};
};

struct Estimate {
    double mean{0.0};
    double std_error{0.0};
    double n_effective{0.0};
};

/// One retained sample, as surfaced to trace hooks. `sequence` points at the
/// chain's live buffer and is only valid during the hook call.
struct ChainSample {
    int z0{0};
    int order{0};
    int sign{0};
    double log_abs_weight{0.0};
    const std::vector<int>* sequence{nullptr};
};

struct SamplerReport {
    Estimate sign;
    std::uint64_t samples{0};
    std::uint64_t cap_hits{0};  // retained samples pinned at the order cap
    double cap_hit_fraction{0.0};
    int chains{0};
    bool sign_collapse_warning{false};  // |<sgn>| within 2 std errors of 0
    bool cap_warning{false};            // cap-hit fraction above 1e-4
    std::vector<double> chain_sign_means;
    std::optional<Estimate> observable;
};

using SampleHook = std::function<void(int chain, std::uint64_t index, const ChainSample&)>;

/// Sample |W|-distributed configurations with the reversible move set
/// (pair-insert / pair-remove / adjacent swap / cycle rotation / q=0 state
/// jump) and estimate <sgn>. Fully deterministic for a given seed; chains are
/// independent and may run on separate threads.
SamplerReport run(const PmrHamiltonian& h, const SamplerParams& params,
                  const std::vector<double>* diagonal_observable = nullptr,
                  const SampleHook& hook = {});

/// <A> for a real diagonal observable via sign reweighting <A sgn>/<sgn>.
Estimate estimate_diagonal_observable(const PmrHamiltonian& h, const SamplerParams& params,
                                      const std::vector<double>& a);

struct AuditReport {
    std::uint64_t moves_checked{0};
    std::uint64_t moves_accepted{0};
    double max_balance_violation{0.0};  // relative error in the balance identity
    double max_cache_drift{0.0};        // incremental vs from-scratch log weight
    bool ok() const { return max_balance_violation < 1e-9 && max_cache_drift < 1e-9; }
};

/// Debug run over a single chain: every proposal's acceptance ratio is
/// re-derived from from-scratch weights and proposal probabilities, and the
/// incremental weight cache is checked against full recomputation.
AuditReport run_audit(const PmrHamiltonian& h, const SamplerParams& params, std::uint64_t steps);

}  // namespace odesign
