#include "odesign/pmr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odesign {

bool Permutation::is_identity() const {
    for (int i = 0; i < dim(); ++i)
        if (map[i] != i) return false;
    return true;
}

bool Permutation::is_fixed_point_free() const {
    for (int i = 0; i < dim(); ++i)
        if (map[i] == i) return false;
    return true;
}

bool Permutation::is_bijection() const {
    std::vector<char> seen(map.size(), 0);
    for (int t : map) {
        if (t < 0 || t >= dim() || seen[t]) return false;
        seen[t] = 1;
    }
    return true;
}

Permutation Permutation::inverse() const {
    Permutation inv;
    inv.map.resize(map.size());
    for (int i = 0; i < dim(); ++i) inv.map[map[i]] = i;
    return inv;
}

int PmrHamiltonian::partner(int j) const {
    const Permutation inv = terms[j].perm.inverse();
    for (int k = 0; k < term_count(); ++k)
        if (terms[k].perm == inv) return k;
    return -1;
}

void validate(const PmrHamiltonian& h, double tol) {
    if (h.dim < 1) throw std::invalid_argument("pmr: dimension must be positive");
    if (static_cast<int>(h.d0.size()) != h.dim)
        throw std::invalid_argument("pmr: classical diagonal has wrong length");
    for (int j = 0; j < h.term_count(); ++j) {
        const PmrTerm& t = h.terms[j];
        if (t.perm.dim() != h.dim || static_cast<int>(t.diag.size()) != h.dim)
            throw std::invalid_argument("pmr: term dimension mismatch");
        if (!t.perm.is_bijection()) throw std::invalid_argument("pmr: permutation is not a bijection");
        if (!t.perm.is_fixed_point_free())
            throw std::invalid_argument("pmr: permutation has a fixed point");
        bool all_zero = true;
        for (const Complex& d : t.diag) all_zero = all_zero && d == Complex{};
        if (all_zero) throw std::invalid_argument("pmr: all-zero term present");
        for (int k = 0; k < j; ++k)
            if (h.terms[k].perm == t.perm)
                throw std::invalid_argument("pmr: duplicate permutation");
        const int p = h.partner(j);
        if (p < 0) throw std::invalid_argument("pmr: missing inverse-permutation partner");
        for (int z = 0; z < h.dim; ++z) {
            const int zp = t.perm.apply(z);
            if (std::abs(h.terms[p].diag[z] - std::conj(t.diag[zp])) > tol)
                throw std::invalid_argument("pmr: partner amplitudes are not conjugate");
        }
    }
}

namespace {

struct Partial {
    std::vector<int> map;       // source -> target, -1 unset
    std::vector<char> used;     // target already claimed
    std::vector<Complex> diag;  // amplitude by target
    int mirror{-1};             // index of the inverse-pattern partial
};

Partial make_partial(int n, int mirror) {
    return Partial{std::vector<int>(n, -1), std::vector<char>(n, 0), std::vector<Complex>(n),
                   mirror};
}

void assign(Partial& p, int src, int tgt, Complex v) {
    p.map[src] = tgt;
    p.used[tgt] = 1;
    p.diag[tgt] = v;
}

// Complete parts[idx] to a fixed-point-free bijection with zero amplitudes,
// mirroring every choice into its partner. When the only leftover source and
// target coincide, one real assignment is relocated to a fresh mirrored pair
// first.
void complete(std::vector<Partial>& parts, int idx) {
    const int n = static_cast<int>(parts[idx].map.size());
    std::vector<int> missing_src, missing_tgt;
    for (int s = 0; s < n; ++s)
        if (parts[idx].map[s] == -1) missing_src.push_back(s);
    for (int t = 0; t < n; ++t)
        if (!parts[idx].used[t]) missing_tgt.push_back(t);
    if (missing_src.empty()) return;

    if (missing_src.size() == 1 && missing_src == missing_tgt) {
        Partial& a = parts[idx];
        Partial& b = parts[a.mirror];
        int s0 = -1;
        for (int s = 0; s < n; ++s)
            if (a.map[s] != -1) {
                s0 = s;
                break;
            }
        const int t0 = a.map[s0];
        const Complex va = a.diag[t0];
        const Complex vb = b.diag[s0];
        a.map[s0] = -1;
        a.used[t0] = 0;
        a.diag[t0] = Complex{};
        b.map[t0] = -1;
        b.used[s0] = 0;
        b.diag[s0] = Complex{};
        const int fresh = static_cast<int>(parts.size());
        parts.push_back(make_partial(n, fresh + 1));
        parts.push_back(make_partial(n, fresh));
        assign(parts[fresh], s0, t0, va);
        assign(parts[fresh + 1], t0, s0, vb);
        complete(parts, idx);
        return;
    }

    Partial& a = parts[idx];
    std::vector<char> taken(missing_tgt.size(), 0);
    std::vector<std::pair<int, int>> placed;  // completion assignments made here
    for (int s : missing_src) {
        int pick = -1;
        for (std::size_t k = 0; k < missing_tgt.size(); ++k)
            if (!taken[k] && missing_tgt[k] != s) {
                pick = static_cast<int>(k);
                break;
            }
        if (pick >= 0) {
            taken[static_cast<std::size_t>(pick)] = 1;
            assign(a, s, missing_tgt[static_cast<std::size_t>(pick)], Complex{});
            placed.emplace_back(s, missing_tgt[static_cast<std::size_t>(pick)]);
        } else {
            // only t == s remains: retarget an earlier zero completion
            const auto [sp, tp] = placed.back();
            placed.pop_back();
            a.map[s] = tp;
            a.map[sp] = s;
            a.used[s] = 1;
            placed.emplace_back(s, tp);
            placed.emplace_back(sp, s);
        }
    }
    Partial& b = parts[a.mirror];
    for (int s = 0; s < n; ++s) {
        const int t = a.map[s];
        if (b.map[t] == -1) assign(b, t, s, Complex{});
    }
}

void prune_and_merge(PmrHamiltonian& h) {
    std::vector<PmrTerm> merged;
    for (PmrTerm& t : h.terms) {
        bool found = false;
        for (PmrTerm& m : merged) {
            if (m.perm == t.perm) {
                for (int z = 0; z < h.dim; ++z) m.diag[z] += t.diag[z];
                found = true;
                break;
            }
        }
        if (!found) merged.push_back(std::move(t));
    }
    h.terms.clear();
    for (PmrTerm& t : merged) {
        bool all_zero = true;
        for (const Complex& d : t.diag) all_zero = all_zero && d == Complex{};
        if (!all_zero) h.terms.push_back(std::move(t));
    }
}

}  // namespace

PmrHamiltonian decompose(const DenseMatrix& m, double tol) {
    require_hermitian(m, tol);
    const int n = m.dim();
    PmrHamiltonian h;
    h.dim = n;
    h.d0.resize(n);
    for (int i = 0; i < n; ++i) h.d0[i] = m.at(i, i).real();

    std::vector<Partial> parts;
    std::vector<char> covered(static_cast<std::size_t>(n) * n, 0);

    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) {
            if (r == c || covered[static_cast<std::size_t>(r) * n + c]) continue;
            if (std::abs(m.at(r, c)) <= tol) continue;
            // hop c -> r with amplitude H_rc, plus its Hermitian mirror r -> c
            int chosen = -1;
            for (int j = 0; j < static_cast<int>(parts.size()); ++j) {
                const Partial& a = parts[j];
                const Partial& b = parts[a.mirror];
                if (a.map[c] == -1 && !a.used[r] && b.map[r] == -1 && !b.used[c]) {
                    chosen = j;
                    break;
                }
            }
            if (chosen < 0) {
                chosen = static_cast<int>(parts.size());
                parts.push_back(make_partial(n, chosen + 1));
                parts.push_back(make_partial(n, chosen));
            }
            assign(parts[chosen], c, r, m.at(r, c));
            assign(parts[parts[chosen].mirror], r, c, m.at(c, r));
            covered[static_cast<std::size_t>(r) * n + c] = 1;
            covered[static_cast<std::size_t>(c) * n + r] = 1;
        }
    }

    for (int idx = 0; idx < static_cast<int>(parts.size()); ++idx) complete(parts, idx);

    for (Partial& p : parts) {
        PmrTerm t;
        t.perm.map = std::move(p.map);
        t.diag = std::move(p.diag);
        h.terms.push_back(std::move(t));
    }
    prune_and_merge(h);
    return h;
}

DenseMatrix recompose(const PmrHamiltonian& h) {
    DenseMatrix m(h.dim);
    for (int z = 0; z < h.dim; ++z) m.at(z, z) = h.d0[z];
    for (const PmrTerm& t : h.terms) {
        for (int z = 0; z < h.dim; ++z) {
            const int zp = t.perm.apply(z);
            m.at(zp, z) += t.diag[zp];
        }
    }
    return m;
}

bool is_stoquastic(const DenseMatrix& m, double tol) {
    const int n = m.dim();
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (r == c) continue;
            const Complex v = m.at(r, c);
            if (v.real() > tol || std::fabs(v.imag()) > tol) return false;
        }
    return true;
}

PmrHamiltonian stoquasticize(const PmrHamiltonian& h) {
    PmrHamiltonian out = h;
    for (PmrTerm& t : out.terms)
        for (Complex& d : t.diag) d = Complex{-std::abs(d), 0.0};
    return out;
}

Complex hopping_amplitude(const PmrHamiltonian& h, int term_index, int z) {
    if (term_index < 0 || term_index >= h.term_count())
        throw std::out_of_range("hopping_amplitude: term index out of range");
    if (z < 0 || z >= h.dim) throw std::out_of_range("hopping_amplitude: state out of range");
    const PmrTerm& t = h.terms[term_index];
    return t.diag[t.perm.apply(z)];
}

}  // namespace odesign
