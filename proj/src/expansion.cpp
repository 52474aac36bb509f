#include "odesign/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <unordered_map>

#include "odesign/errors.hpp"

namespace odesign {

namespace {

constexpr double kZeroAmpTol = 1e-12;
constexpr std::uint64_t kBruteNodeBudget = 30'000'000;

int thresholded_sign(double re, double magnitude) {
    if (std::fabs(re) <= kZeroAmpTol * magnitude) return 0;
    return re > 0.0 ? 1 : -1;
}

// minimal hop counts back to z0 (BFS over inverse hops)
std::vector<int> return_distance(const PmrHamiltonian& h, int z0) {
    std::vector<int> dist(h.dim, std::numeric_limits<int>::max());
    dist[z0] = 0;
    std::vector<Permutation> inv;
    inv.reserve(h.terms.size());
    for (const PmrTerm& t : h.terms) inv.push_back(t.perm.inverse());
    std::deque<int> queue{z0};
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (const Permutation& p : inv) {
            const int v = p.apply(u);
            if (dist[v] == std::numeric_limits<int>::max()) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

}  // namespace

PathTrace trace_path(const PmrHamiltonian& h, const Configuration& c) {
    if (c.z0 < 0 || c.z0 >= h.dim) throw std::invalid_argument("trace_path: z0 out of range");
    PathTrace t;
    t.states.reserve(c.sequence.size() + 1);
    t.energies.reserve(c.sequence.size() + 1);
    t.states.push_back(c.z0);
    t.energies.push_back(h.d0[c.z0]);
    int z = c.z0;
    for (int j : c.sequence) {
        if (j < 0 || j >= h.term_count())
            throw std::invalid_argument("trace_path: term index out of range");
        const PmrTerm& term = h.terms[j];
        z = term.perm.apply(z);
        t.states.push_back(z);
        t.energies.push_back(h.d0[z]);
        const Complex d = term.diag[z];
        t.amplitude_product *= d;
        t.magnitude_product *= std::abs(d);
    }
    return t;
}

bool is_closed(const PmrHamiltonian& h, const Configuration& c) {
    int z = c.z0;
    for (int j : c.sequence) z = h.terms[j].perm.apply(z);
    return z == c.z0;
}

void enumerate_closed(const PmrHamiltonian& h, int q_max,
                      const std::function<void(const Configuration&)>& visit) {
    if (q_max < 0) throw std::invalid_argument("enumerate_closed: q_max must be >= 0");
    const int m = h.term_count();
    std::uint64_t nodes = 0;
    for (int z0 = 0; z0 < h.dim; ++z0) {
        const std::vector<int> dist = return_distance(h, z0);
        Configuration c;
        c.z0 = z0;
        // iterative DFS: frames of (state, next term index to try)
        std::vector<std::pair<int, int>> stack{{z0, 0}};
        visit(c);
        while (!stack.empty()) {
            auto& [z, next] = stack.back();
            if (next >= m || static_cast<int>(stack.size()) - 1 >= q_max) {
                stack.pop_back();
                if (!c.sequence.empty()) c.sequence.pop_back();
                continue;
            }
            const int j = next++;
            const int zp = h.terms[j].perm.apply(z);
            const int depth = static_cast<int>(stack.size());  // depth after this hop
            if (dist[zp] == std::numeric_limits<int>::max() || depth + dist[zp] > q_max) continue;
            if (++nodes > kBruteNodeBudget)
                throw InfeasibleError("enumerate_closed: search budget exceeded");
            c.sequence.push_back(j);
            stack.emplace_back(zp, 0);
            if (zp == z0) visit(c);
        }
    }
}

std::vector<Configuration> enumerate_closed(const PmrHamiltonian& h, int q_max) {
    std::vector<Configuration> out;
    enumerate_closed(h, q_max, [&](const Configuration& c) { out.push_back(c); });
    return out;
}

Gbw weight(const PmrHamiltonian& h, const Configuration& c, double beta) {
    if (!is_closed(h, c)) throw std::invalid_argument("weight: configuration is not closed");
    const PathTrace t = trace_path(h, c);
    Gbw g;
    g.order = c.order();
    const double re = t.amplitude_product.real();
    const DivDiffTable table(t.energies, beta);
    const DdValue& dd = table.value();
    g.real_weight = re * dd.value;
    g.sign = thresholded_sign(re, t.magnitude_product) * dd.sign;
    g.log_magnitude = std::log(std::fabs(re)) + dd.log_magnitude;
    return g;
}

int weight_sign(const PmrHamiltonian& h, const Configuration& c) {
    if (!is_closed(h, c)) throw std::invalid_argument("weight_sign: configuration is not closed");
    const PathTrace t = trace_path(h, c);
    const int amp = thresholded_sign(t.amplitude_product.real(), t.magnitude_product);
    return c.order() % 2 == 0 ? amp : -amp;
}

namespace {

struct Buckets {
    std::vector<double> z;
    std::vector<double> abs;
};

// DFS over closed configurations with the divided-difference table updated
// incrementally: extend on every hop, positional remove on backtrack.
// Zero-amplitude branches contribute nothing to either sum and are pruned.
Buckets brute_buckets(const PmrHamiltonian& h, double beta, int q_max) {
    Buckets b;
    b.z.assign(q_max + 1, 0.0);
    b.abs.assign(q_max + 1, 0.0);
    const int m = h.term_count();
    std::uint64_t nodes = 0;
    struct Frame {
        int state;
        int next;
        Complex amp;
    };
    for (int z0 = 0; z0 < h.dim; ++z0) {
        const std::vector<int> dist = return_distance(h, z0);
        DivDiffTable table({h.d0[z0]}, beta);
        std::vector<Frame> stack{{z0, 0, Complex{1.0, 0.0}}};
        b.z[0] += table.value().value;
        b.abs[0] += std::fabs(table.value().value);
        while (!stack.empty()) {
            Frame& f = stack.back();
            const int depth = static_cast<int>(stack.size()) - 1;
            if (f.next >= m || depth >= q_max) {
                stack.pop_back();
                if (!stack.empty()) table.remove(table.size() - 1);
                continue;
            }
            const int j = f.next++;
            const int zp = h.terms[j].perm.apply(f.state);
            if (dist[zp] == std::numeric_limits<int>::max() || depth + 1 + dist[zp] > q_max)
                continue;
            const Complex d = h.terms[j].diag[zp];
            if (d == Complex{}) continue;
            if (++nodes > kBruteNodeBudget)
                throw InfeasibleError("series_partition: enumeration budget exceeded");
            const Complex amp = f.amp * d;
            table.extend(h.d0[zp]);
            stack.push_back(Frame{zp, 0, amp});
            if (zp == z0) {
                const double re = amp.real();
                // the magnitude product bounds |Re|; the same zero threshold
                // as weight_sign keeps analytically-null weights out
                if (std::fabs(re) > kZeroAmpTol * std::abs(amp)) {
                    const double w = re * table.value().value;
                    b.z[depth + 1] += w;
                    b.abs[depth + 1] += std::fabs(w);
                }
            }
        }
    }
    return b;
}

// Group walks by (start state, current state, energy-visit histogram). The
// divided difference is a symmetric function of the visited energies, so the
// histogram carries everything the weight needs; the per-group accumulators
// are sum(prod d) and sum(prod |d|).
struct GroupedState {
    Complex amp;
    double mag;
};

Buckets grouped_buckets(const PmrHamiltonian& h, double beta, int q_max, double tail_tol,
                        bool* early_stop_q, bool* real_amplitudes) {
    const int n = h.dim;
    // distinct classical energies
    std::vector<double> values;
    std::vector<int> value_of(n);
    for (int z = 0; z < n; ++z) {
        const double e = h.d0[z];
        auto it = std::find(values.begin(), values.end(), e);
        if (it == values.end()) {
            values.push_back(e);
            value_of[z] = static_cast<int>(values.size()) - 1;
        } else {
            value_of[z] = static_cast<int>(it - values.begin());
        }
    }
    const int v = static_cast<int>(values.size());
    if (n > 256 || v > 8 || q_max > 62)
        throw InfeasibleError("series_partition: model too large for the grouped engine");

    *real_amplitudes = true;
    for (const PmrTerm& t : h.terms)
        for (const Complex& d : t.diag)
            if (std::fabs(d.imag()) > 1e-14) *real_amplitudes = false;

    // key: (z0 * n + z) in the low 16 bits, then 6 bits per energy count
    auto bump = [&](std::uint64_t key, int value_index) {
        return key + (std::uint64_t{1} << (16 + 6 * value_index));
    };

    std::unordered_map<std::uint64_t, GroupedState> cur;
    for (int z0 = 0; z0 < n; ++z0) {
        const std::uint64_t key = static_cast<std::uint64_t>(z0 * n + z0);
        cur[bump(key, value_of[z0])] = GroupedState{Complex{1.0, 0.0}, 1.0};
    }

    // cache of divided-difference values per histogram (the high key bits)
    std::unordered_map<std::uint64_t, double> dd_cache;
    auto dd_of = [&](std::uint64_t hist_bits) {
        auto it = dd_cache.find(hist_bits);
        if (it != dd_cache.end()) return it->second;
        std::vector<double> inputs;
        for (int k = 0; k < v; ++k) {
            const int count = static_cast<int>((hist_bits >> (16 + 6 * k)) & 0x3f);
            inputs.insert(inputs.end(), count, values[k]);
        }
        const double val = DivDiffTable(inputs, beta).value().value;
        dd_cache.emplace(hist_bits, val);
        return val;
    };

    Buckets b;
    b.z.assign(q_max + 1, 0.0);
    b.abs.assign(q_max + 1, 0.0);
    double cumulative = 0.0;
    int stop_q = -1;
    for (int q = 0; q <= q_max; ++q) {
        // harvest closed walks of the current order
        for (const auto& [key, acc] : cur) {
            const int z0 = static_cast<int>((key & 0xffff)) / n;
            const int z = static_cast<int>((key & 0xffff)) % n;
            if (z != z0) continue;
            const double dd = dd_of(key >> 16 << 16);
            b.z[q] += acc.amp.real() * dd;
            b.abs[q] += acc.mag * std::fabs(dd);
        }
        cumulative += b.abs[q];
        if (q >= 1 && cumulative > 0.0 && b.abs[q - 1] + b.abs[q] < tail_tol * cumulative) {
            stop_q = q;
            break;
        }
        if (q == q_max || h.term_count() == 0) break;
        // advance one hop
        std::unordered_map<std::uint64_t, GroupedState> next;
        next.reserve(cur.size() * h.term_count());
        for (const auto& [key, acc] : cur) {
            const int z0n = static_cast<int>(key & 0xffff);
            const int z = z0n % n;
            for (const PmrTerm& t : h.terms) {
                const int zp = t.perm.apply(z);
                const Complex d = t.diag[zp];
                if (d == Complex{}) continue;
                const std::uint64_t nk = bump(key - z + zp, value_of[zp]);
                GroupedState& g = next[nk];
                g.amp += acc.amp * d;
                g.mag += acc.mag * std::abs(d);
            }
        }
        cur = std::move(next);
    }
    if (stop_q >= 0) {
        b.z.resize(stop_q + 1);
        b.abs.resize(stop_q + 1);
        *early_stop_q = true;
    } else {
        *early_stop_q = false;
    }
    return b;
}

std::uint64_t brute_node_estimate(const PmrHamiltonian& h, int q_max) {
    const std::uint64_t m = static_cast<std::uint64_t>(h.term_count());
    std::uint64_t total = 0, level = 1;
    for (int d = 0; d <= q_max; ++d) {
        total += level * static_cast<std::uint64_t>(h.dim);
        if (total > kBruteNodeBudget) return total;
        if (m == 0) break;
        if (level > kBruteNodeBudget / std::max<std::uint64_t>(m, 1)) return kBruteNodeBudget + 1;
        level *= m;
    }
    return total;
}

}  // namespace

SeriesResult series_partition(const PmrHamiltonian& h, double beta, int q_max, double tail_tol,
                              SeriesEngine engine) {
    if (tail_tol <= 0.0) throw std::invalid_argument("series_partition: tail_tol must be > 0");
    if (q_max < 0) throw std::invalid_argument("series_partition: q_max must be >= 0");

    SeriesEngine chosen = engine;
    if (engine == SeriesEngine::automatic) {
        // grouped is exact (Z and |W| mass) for real-amplitude models within
        // its packing caps, and far cheaper than enumeration
        bool real_amps = true;
        for (const PmrTerm& t : h.terms)
            for (const Complex& d : t.diag)
                if (std::fabs(d.imag()) > 1e-14) real_amps = false;
        std::vector<double> distinct;
        for (double e : h.d0)
            if (std::find(distinct.begin(), distinct.end(), e) == distinct.end())
                distinct.push_back(e);
        const bool grouped_capable =
            h.dim <= 256 && distinct.size() <= 8 && q_max <= 62;
        if (real_amps && grouped_capable)
            chosen = SeriesEngine::grouped;
        else
            chosen = brute_node_estimate(h, q_max) <= kBruteNodeBudget ? SeriesEngine::brute
                                                                       : SeriesEngine::grouped;
    }

    Buckets b;
    bool abs_exact = true;
    if (chosen == SeriesEngine::brute) {
        b = brute_buckets(h, beta, q_max);
    } else {
        bool stopped = false, real_amps = false;
        b = grouped_buckets(h, beta, q_max, tail_tol, &stopped, &real_amps);
        abs_exact = real_amps;
    }

    SeriesResult r;
    r.abs_sum_exact = abs_exact;
    r.order_z = b.z;
    r.order_abs = b.abs;
    const int computed_max = static_cast<int>(b.z.size()) - 1;

    int achieved = -1;
    if (h.term_count() == 0) {
        achieved = 0;
    } else {
        double cumulative = b.abs[0];
        for (int q = 1; q <= computed_max; ++q) {
            cumulative += b.abs[q];
            if (cumulative > 0.0 && b.abs[q - 1] + b.abs[q] < tail_tol * cumulative) {
                achieved = q;
                break;
            }
        }
    }
    if (achieved < 0) {
        achieved = computed_max;
        r.truncated = true;
    }
    r.achieved_q = achieved;
    for (int q = 0; q <= achieved; ++q) {
        r.z += b.z[q];
        r.abs_sum += b.abs[q];
    }
    return r;
}

double series_sign(const PmrHamiltonian& h, double beta, int q_max, double tail_tol,
                   SeriesEngine engine) {
    const SeriesResult r = series_partition(h, beta, q_max, tail_tol, engine);
    if (!r.abs_sum_exact)
        throw InfeasibleError(
            "series_sign: |W| mass is only a bound for complex-amplitude models at this scale; "
            "reduce q_max into the enumeration budget");
    if (r.abs_sum == 0.0) throw std::domain_error("series_sign: all weights vanish");
    return r.z / r.abs_sum;
}

}  // namespace odesign
