#include "odesign/sampler.hpp"

#include "odesign/divdiff.hpp"
#include "odesign/expansion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "odesign/errors.hpp"

namespace odesign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroAmpTol = 1e-12;  // matches the expansion module's zero-weight rule
constexpr int kMaxCycleLen = 3;

// xoshiro256** seeded via splitmix64; pure integer ops, bit-exact everywhere.
struct Rng {
    std::array<std::uint64_t, 4> s{};

    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s) {
            x += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            w = z ^ (z >> 31);
        }
    }
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    std::uint64_t next() {
        const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
    int pick(int n) { return std::min(n - 1, static_cast<int>(uniform() * n)); }
};

// Short term-index sequences whose permutation product is the identity;
// inserting one anywhere keeps a path closed. Lengths 2 and 3 cover the
// partner pairs and the odd-order sectors of the built-in models.
struct CycleSet {
    std::vector<std::vector<int>> cycles;
    std::unordered_set<std::uint32_t> keys;

    static std::uint32_t key(const int* seq, int len) {
        std::uint32_t k = static_cast<std::uint32_t>(len);
        for (int i = 0; i < len; ++i) k = (k << 10) | static_cast<std::uint32_t>(seq[i] + 1);
        return k;
    }

    explicit CycleSet(const PmrHamiltonian& h) {
        const int m = h.term_count();
        if (m == 0) return;
        std::vector<int> seq;
        // depth-first over sequences up to kMaxCycleLen, tracking the product
        std::vector<Permutation> prod_stack;
        Permutation ident;
        ident.map.resize(h.dim);
        for (int i = 0; i < h.dim; ++i) ident.map[i] = i;
        std::function<void(const Permutation&)> walk = [&](const Permutation& prod) {
            if (seq.size() >= 2 && prod == ident) {
                cycles.push_back(seq);
                keys.insert(key(seq.data(), static_cast<int>(seq.size())));
            }
            if (seq.size() == kMaxCycleLen) return;
            for (int j = 0; j < m; ++j) {
                Permutation next;
                next.map.resize(h.dim);
                for (int i = 0; i < h.dim; ++i) next.map[i] = h.terms[j].perm.apply(prod.map[i]);
                seq.push_back(j);
                walk(next);
                seq.pop_back();
            }
        };
        if (static_cast<long long>(m) * m * m <= 2'000'000) {
            walk(ident);
        } else {
            // very wide models: fall back to the partner pairs only
            for (int j = 0; j < m; ++j) {
                const int p = h.partner(j);
                std::vector<int> pair{j, p};
                cycles.push_back(pair);
                keys.insert(key(pair.data(), 2));
            }
        }
    }

    int count_matches(const std::vector<int>& seq) const {
        const int q = static_cast<int>(seq.size());
        int count = 0;
        for (int len = 2; len <= kMaxCycleLen; ++len)
            for (int p = 0; p + len <= q; ++p)
                if (keys.count(key(seq.data() + p, len))) ++count;
        return count;
    }

    // k-th match as (position, length), in scan order
    std::pair<int, int> nth_match(const std::vector<int>& seq, int k) const {
        const int q = static_cast<int>(seq.size());
        for (int len = 2; len <= kMaxCycleLen; ++len)
            for (int p = 0; p + len <= q; ++p)
                if (keys.count(key(seq.data() + p, len)) && k-- == 0) return {p, len};
        throw std::logic_error("nth_match: index out of range");
    }
};

enum class Move { cycle_insert, cycle_remove, swap_adjacent, rotate, jump };

struct MoveRecord {
    Move type{Move::cycle_insert};
    bool valid{false};
    bool accepted{false};
    bool cap_reject{false};
    double rho_log{0.0};
    double log_pf{0.0};
    double log_pr{0.0};
};

struct Chain {
    const PmrHamiltonian* h;
    const CycleSet* cycles;
    double beta;
    int q_cap;
    Rng rng;

    int z0{0};
    std::vector<int> seq;
    std::vector<int> states;  // z_0..z_q; states.front() == states.back() when q >= 1
    DivDiffTable table;
    double log_w{0.0};
    int sign{1};

    // scratch for proposal rollback
    std::vector<int> seq_backup, states_backup;
    DivDiffTable table_backup;

    Chain(const PmrHamiltonian& ham, const CycleSet& cs, double b, int cap, std::uint64_t seed)
        : h(&ham), cycles(&cs), beta(b), q_cap(cap), rng(seed), table({0.0}, b),
          table_backup({0.0}, b) {
        z0 = rng.pick(std::max(1, h->dim));
        states = {z0};
        table = DivDiffTable({h->d0[z0]}, beta);
        refresh_weight();
    }

    int order() const { return static_cast<int>(seq.size()); }

    std::pair<double, double> amplitude() const {
        Complex amp{1.0, 0.0};
        double mag = 1.0;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            const Complex d = h->terms[seq[i]].diag[states[i + 1]];
            amp *= d;
            mag *= std::abs(d);
        }
        return {amp.real(), mag};
    }

    void refresh_weight() {
        const auto [re, mag] = amplitude();
        const DdValue& dd = table.value();
        const int amp_sign = std::fabs(re) <= kZeroAmpTol * mag ? 0 : (re > 0.0 ? 1 : -1);
        sign = amp_sign * dd.sign;
        log_w = sign == 0 ? -kInf : std::log(std::fabs(re)) + dd.log_magnitude;
    }

    void snapshot() {
        seq_backup = seq;
        states_backup = states;
        table_backup = table;
    }

    void rollback() {
        seq.swap(seq_backup);
        states.swap(states_backup);
        std::swap(table, table_backup);
    }

    MoveRecord step() {
        MoveRecord rec;
        const int q = order();
        const int type = rng.pick(5);
        const double old_log_w = log_w;

        switch (type) {
            case 0: {  // cycle insert
                rec.type = Move::cycle_insert;
                if (cycles->cycles.empty()) return rec;
                const auto& cyc = cycles->cycles[rng.pick(static_cast<int>(cycles->cycles.size()))];
                const int len = static_cast<int>(cyc.size());
                if (q + len > q_cap) {
                    rec.cap_reject = true;
                    return rec;
                }
                const int p = rng.pick(q + 1);
                snapshot();
                const int w = states[p];
                std::vector<int> span;
                span.reserve(len);
                int z = w;
                for (int j : cyc) {
                    z = h->terms[j].perm.apply(z);
                    span.push_back(z);
                }
                seq.insert(seq.begin() + p, cyc.begin(), cyc.end());
                states.insert(states.begin() + p + 1, span.begin(), span.end());
                for (int s : span) table.extend(h->d0[s]);
                rec.log_pf = -std::log(double(cycles->cycles.size())) - std::log(double(q + 1));
                rec.log_pr = -std::log(double(cycles->count_matches(seq)));
                rec.valid = true;
                break;
            }
            case 1: {  // cycle remove
                rec.type = Move::cycle_remove;
                const int k = cycles->count_matches(seq);
                if (k == 0) return rec;
                const auto [p, len] = cycles->nth_match(seq, rng.pick(k));
                snapshot();
                for (int i = 1; i <= len; ++i) table.remove_value(h->d0[states[p + i]]);
                seq.erase(seq.begin() + p, seq.begin() + p + len);
                states.erase(states.begin() + p + 1, states.begin() + p + 1 + len);
                rec.log_pf = -std::log(double(k));
                rec.log_pr = -std::log(double(cycles->cycles.size())) -
                             std::log(double(q - len + 1));
                rec.valid = true;
                break;
            }
            case 2: {  // adjacent swap
                rec.type = Move::swap_adjacent;
                if (q < 2) return rec;
                const int p = rng.pick(q - 1);
                if (seq[p] == seq[p + 1]) return rec;
                const int w_new = h->terms[seq[p + 1]].perm.apply(states[p]);
                if (h->terms[seq[p]].perm.apply(w_new) != states[p + 2]) return rec;
                snapshot();
                table.remove_value(h->d0[states[p + 1]]);
                table.extend(h->d0[w_new]);
                std::swap(seq[p], seq[p + 1]);
                states[p + 1] = w_new;
                rec.valid = true;
                break;
            }
            case 3: {  // cycle rotation (relabels the base point)
                rec.type = Move::rotate;
                if (q == 0) return rec;
                snapshot();
                const bool left = rng.pick(2) == 0;
                if (left) {
                    const double e_old = h->d0[states[0]];
                    std::rotate(seq.begin(), seq.begin() + 1, seq.end());
                    states.erase(states.begin());
                    states.push_back(states.front());
                    table.remove_value(e_old);
                    table.extend(h->d0[states.front()]);
                } else {
                    const double e_old = h->d0[states[0]];
                    std::rotate(seq.begin(), seq.end() - 1, seq.end());
                    states.pop_back();
                    std::rotate(states.begin(), states.end() - 1, states.end());
                    states.push_back(states.front());
                    table.remove_value(e_old);
                    table.extend(h->d0[states.front()]);
                }
                z0 = states.front();
                rec.valid = true;
                break;
            }
            default: {  // q = 0 basis-state jump
                rec.type = Move::jump;
                if (q != 0 || h->dim < 2) return rec;
                snapshot();
                const double e_old = h->d0[states[0]];
                const int z_new = rng.pick(h->dim);
                states[0] = z_new;
                z0 = z_new;
                table.extend(h->d0[z_new]);
                table.remove_value(e_old);
                rec.valid = true;
                break;
            }
        }

        const int old_sign = sign;
        refresh_weight();
        rec.rho_log = log_w - old_log_w + rec.log_pr - rec.log_pf;
        const bool accept =
            sign != 0 && (rec.rho_log >= 0.0 || rng.uniform() < std::exp(rec.rho_log));
        if (accept) {
            rec.accepted = true;
        } else {
            rollback();
            z0 = states.front();
            log_w = old_log_w;
            sign = old_sign;
        }
        return rec;
    }
};

struct ChainResult {
    double sign_sum{0.0};
    double obs_sign_sum{0.0};
    std::uint64_t cap_hits{0};
    std::uint64_t samples{0};
};

}  // namespace

SamplerReport run(const PmrHamiltonian& h, const SamplerParams& params,
                  const std::vector<double>* diagonal_observable, const SampleHook& hook) {
    if (params.n_samples < 1) throw std::invalid_argument("sampler: n_samples must be >= 1");
    if (params.n_chains < 1) throw std::invalid_argument("sampler: n_chains must be >= 1");
    if (params.thinning < 1) throw std::invalid_argument("sampler: thinning must be >= 1");
    if (params.q_cap < 2) throw std::invalid_argument("sampler: q_cap must be >= 2");
    if (!(params.beta > 0.0)) throw std::invalid_argument("sampler: beta must be positive");
    if (diagonal_observable && static_cast<int>(diagonal_observable->size()) != h.dim)
        throw std::invalid_argument("sampler: observable length mismatch");

    const CycleSet cycles(h);
    const int chains = params.n_chains;
    const std::uint64_t per_chain = std::max<std::uint64_t>(1, params.n_samples / chains);

    // derive independent chain seeds from the master seed
    std::vector<std::uint64_t> seeds(chains);
    {
        Rng seeder(params.seed);
        for (auto& s : seeds) s = seeder.next();
    }

    std::vector<ChainResult> results(chains);
    auto run_chain = [&](int c) {
        Chain chain(h, cycles, params.beta, params.q_cap, seeds[c]);
        for (std::uint64_t i = 0; i < params.burn_in; ++i) chain.step();
        ChainResult r;
        for (std::uint64_t i = 0; i < per_chain; ++i) {
            for (int t = 0; t < params.thinning; ++t) chain.step();
            const int s = chain.sign;
            r.sign_sum += s;
            if (chain.order() >= params.q_cap - 1) ++r.cap_hits;
            if (diagonal_observable) {
                const double a = (*diagonal_observable)[chain.z0];
                r.obs_sign_sum += a * s;
            }
            if (hook) hook(c, i, ChainSample{chain.z0, chain.order(), s, chain.log_w, &chain.seq});
            ++r.samples;
        }
        results[c] = r;
    };

    const int workers = std::max(1, std::min(params.threads, chains));
    if (workers == 1) {
        for (int c = 0; c < chains; ++c) run_chain(c);
    } else {
        std::vector<std::thread> pool;
        for (int wkr = 0; wkr < workers; ++wkr)
            pool.emplace_back([&, wkr] {
                for (int c = wkr; c < chains; c += workers) run_chain(c);
            });
        for (auto& t : pool) t.join();
    }

    SamplerReport rep;
    rep.chains = chains;
    std::vector<double> chain_means(chains);
    for (int c = 0; c < chains; ++c) {
        chain_means[c] = results[c].sign_sum / double(results[c].samples);
        rep.samples += results[c].samples;
        rep.cap_hits += results[c].cap_hits;
    }
    rep.chain_sign_means = chain_means;
    double mean = 0.0;
    for (double m : chain_means) mean += m;
    mean /= chains;
    double var = 0.0;
    for (double m : chain_means) var += (m - mean) * (m - mean);
    const double stderr_sign = chains > 1 ? std::sqrt(var / (chains * (chains - 1))) : 0.0;
    rep.sign.mean = mean;
    rep.sign.std_error = stderr_sign;
    const double sample_var = std::max(0.0, 1.0 - mean * mean);
    rep.sign.n_effective = stderr_sign > 0.0 ? sample_var / (stderr_sign * stderr_sign)
                                             : static_cast<double>(rep.samples);
    rep.cap_hit_fraction = double(rep.cap_hits) / double(rep.samples);
    rep.cap_warning = rep.cap_hit_fraction > 1e-4;
    rep.sign_collapse_warning = std::fabs(mean) < 2.0 * stderr_sign;

    if (diagonal_observable) {
        Estimate obs;
        double num = 0.0, den = 0.0;
        std::vector<double> chain_ratio(chains);
        for (int c = 0; c < chains; ++c) {
            num += results[c].obs_sign_sum;
            den += results[c].sign_sum;
            chain_ratio[c] = results[c].sign_sum != 0.0
                                 ? results[c].obs_sign_sum / results[c].sign_sum
                                 : 0.0;
        }
        obs.mean = den != 0.0 ? num / den : std::nan("");
        double rmean = 0.0;
        for (double r : chain_ratio) rmean += r;
        rmean /= chains;
        double rvar = 0.0;
        for (double r : chain_ratio) rvar += (r - rmean) * (r - rmean);
        obs.std_error = chains > 1 ? std::sqrt(rvar / (chains * (chains - 1))) : 0.0;
        obs.n_effective = rep.sign.n_effective;
        rep.observable = obs;
    }
    return rep;
}

Estimate estimate_diagonal_observable(const PmrHamiltonian& h, const SamplerParams& params,
                                      const std::vector<double>& a) {
    const SamplerReport rep = run(h, params, &a);
    return *rep.observable;
}

AuditReport run_audit(const PmrHamiltonian& h, const SamplerParams& params, std::uint64_t steps) {
    const CycleSet cycles(h);
    Chain chain(h, cycles, params.beta, params.q_cap, params.seed);
    AuditReport audit;

    auto fresh_log_w = [&](const Configuration& c) {
        const Gbw g = weight(h, c, params.beta);
        return std::pair<double, int>{g.log_magnitude, g.sign};
    };

    for (std::uint64_t i = 0; i < steps; ++i) {
        const Configuration before{chain.z0, chain.seq};
        const auto [log_before, sign_before] = fresh_log_w(before);
        const int q_before = before.order();
        const int matches_before = cycles.count_matches(before.sequence);

        const MoveRecord rec = chain.step();
        ++audit.moves_checked;

        // incremental cache vs full recomputation, every step
        const Configuration now{chain.z0, chain.seq};
        const auto [log_now, sign_now] = fresh_log_w(now);
        if (chain.sign != sign_now) audit.max_cache_drift = kInf;
        if (std::isfinite(log_now) || std::isfinite(chain.log_w)) {
            const double drift = std::fabs(chain.log_w - log_now) /
                                 std::max(1.0, std::fabs(log_now));
            audit.max_cache_drift = std::max(audit.max_cache_drift, drift);
        }

        if (!rec.accepted || !rec.valid) continue;
        ++audit.moves_accepted;

        // independently rebuild the balance ratio [p(y) P_r] / [p(x) P_f]
        double log_pf = 0.0, log_pr = 0.0;
        const int q_after = static_cast<int>(chain.seq.size());
        switch (rec.type) {
            case Move::cycle_insert:
                log_pf = -std::log(double(cycles.cycles.size())) - std::log(double(q_before + 1));
                log_pr = -std::log(double(cycles.count_matches(chain.seq)));
                break;
            case Move::cycle_remove:
                log_pf = -std::log(double(matches_before));
                log_pr = -std::log(double(cycles.cycles.size())) - std::log(double(q_after + 1));
                break;
            default:
                break;  // swap, rotate and jump are symmetric proposals
        }
        const double expected_rho = log_now - log_before + log_pr - log_pf;
        const double viol = std::fabs(rec.rho_log - expected_rho) /
                            std::max(1.0, std::fabs(expected_rho));
        audit.max_balance_violation = std::max(audit.max_balance_violation, viol);
    }
    return audit;
}

}  // namespace odesign
