#include "odesign/divdiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace odesign {

namespace {

using detail::DD;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxTerms = 512;  // the 500-term escalation budget
constexpr double kTailTol = 1e-14;      // relative tail that counts as converged
constexpr double kCancelBudget = 8e18;  // max |g_k| / sum the dd arithmetic absorbs
constexpr double kConfluence = 1e-12;   // recursion treats closer inputs as equal

void check_domain(std::span<const double> inputs, double beta) {
    if (inputs.empty()) throw std::domain_error("dd_exp: empty input list");
    if (!std::isfinite(beta)) throw std::domain_error("dd_exp: non-finite beta");
    for (double x : inputs)
        if (!std::isfinite(x)) throw std::domain_error("dd_exp: non-finite input");
}

// 1/n as a double-double, cached; the g-recurrence divides by q+k every step.
DD recip(std::size_t n) {
    static const std::vector<DD> table = [] {
        std::vector<DD> t(2 * kMaxTerms + 2);
        t[0] = DD{0.0};
        for (std::size_t i = 1; i < t.size(); ++i) t[i] = detail::div(1.0, double(i));
        return t;
    }();
    return n < table.size() ? table[n] : detail::div(1.0, double(n));
}

// e^a in double-double: e^a = 2^k e^r, r = a - k ln2, Taylor for |r| <= ln2/2.
DD exp_dd(const DD& a) {
    if (a.hi <= -709.0) return DD{0.0};
    if (a.hi >= 709.0) return DD{std::numeric_limits<double>::infinity()};
    static const DD ln2{6.93147180559945286e-01, 2.31904681384629956e-17};
    const double k = std::round(a.hi / ln2.hi);
    const DD r = detail::sub(a, detail::mul(k, ln2));
    DD sum{1.0};
    DD term{1.0};
    for (std::size_t n = 1; n <= 26; ++n) {
        term = detail::mul(detail::mul(term, r), recip(n));
        sum = detail::add(sum, term);
    }
    const int ki = static_cast<int>(k);
    return DD{std::ldexp(sum.hi, ki), std::ldexp(sum.lo, ki)};
}

double log_abs(const DD& a) {
    const double h = std::fabs(a.hi);
    if (h == 0.0) return -kInf;
    return std::log(h) + std::log1p(a.lo / a.hi);
}

// R_m(y) = e^y - sum_{n<m} y^n/n!, the order-m exponential remainder.
// Divided differences of e^y over q+1 points equal those of R_q because the
// subtracted polynomial has degree < q; working with R_q keeps the recursion
// leaves on the same scale as the result, which is what makes the Newton
// table well conditioned for clustered inputs.
DD exp_remainder(double y, int m) {
    if (m == 0) return exp_dd(DD{y});
    if (std::fabs(y) <= 30.0) {
        // direct tail series from n = m
        DD term{1.0};
        for (int k = 1; k <= m; ++k)
            term = detail::mul(detail::mul(term, y), recip(static_cast<std::size_t>(k)));
        DD sum = term;
        for (int n = m + 1; n <= m + 500; ++n) {
            term = detail::mul(detail::mul(term, y), recip(static_cast<std::size_t>(n)));
            sum = detail::add(sum, term);
            if (std::fabs(term.hi) < 1e-40 * std::fabs(sum.hi)) break;
        }
        return sum;
    }
    DD term{1.0}, poly{1.0};
    for (int n = 1; n < m; ++n) {
        term = detail::mul(detail::mul(term, y), recip(static_cast<std::size_t>(n)));
        poly = detail::add(poly, term);
    }
    return detail::sub(exp_dd(DD{y}), poly);
}

int beta_power_sign(double beta, int q) {
    if (beta > 0.0) return (q % 2 == 0) ? 1 : -1;
    if (beta < 0.0) return 1;
    return q == 0 ? 1 : 0;
}

double pow_int(double base, int n) {
    double r = 1.0, b = base;
    for (int e = n; e > 0; e >>= 1) {
        if (e & 1) r *= b;
        b *= b;
    }
    return r;
}

// value = (-beta)^q * e^{-beta*shift} * sum, with sum > 0
DdValue assemble(int q, double beta, double shift, double sum) {
    DdValue v;
    if (beta == 0.0) {
        // divided difference of the constant function 1
        v.sign = q == 0 ? 1 : 0;
        v.value = v.sign;
        v.log_magnitude = q == 0 ? 0.0 : -kInf;
        return v;
    }
    const double scale = -beta * shift;
    v.sign = beta_power_sign(beta, q);
    v.log_magnitude = q * std::log(std::fabs(beta)) + scale + std::log(sum);
    if (std::fabs(v.log_magnitude) < 700.0 && std::fabs(scale) < 700.0) {
        v.value = pow_int(-beta, q) * std::exp(scale) * sum;
    } else {
        v.value = v.sign * std::exp(v.log_magnitude);
    }
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// recursion oracle: sorted Newton table in long double, confluent branch

DdValue dd_exp_recursive_detailed(std::span<const double> inputs, double beta) {
    check_domain(inputs, beta);
    const int q = static_cast<int>(inputs.size()) - 1;
    std::vector<double> x(inputs.begin(), inputs.end());
    std::sort(x.begin(), x.end());
    const double c = std::accumulate(x.begin(), x.end(), 0.0) / x.size();

    // change of variable y = -beta (x - c): the table computes e^{y}[y_0..y_q]
    // via the remainder R_q, and the result is (-beta)^q e^{-beta c} times it
    std::vector<double> y(q + 1);
    for (int i = 0; i <= q; ++i) {
        const DD yi = detail::mul(-beta, detail::two_sum(x[i], -c));
        y[i] = yi.to_double();
    }

    std::vector<DD> d(q + 1);
    for (int i = 0; i <= q; ++i) d[i] = exp_remainder(y[i], q);

    for (int len = 1; len <= q; ++len) {
        for (int i = 0; i + len <= q; ++i) {
            if (x[i + len] - x[i] <= kConfluence) {
                // window inputs coincide to tolerance: derivative formula,
                // d^len/dy^len R_q = R_{q-len}, divided by len!
                DD p = exp_remainder(y[i], q - len);
                for (int k = 1; k <= len; ++k) p = detail::mul(p, recip(static_cast<std::size_t>(k)));
                d[i] = p;
            } else {
                d[i] = detail::div(detail::sub(d[i + 1], d[i]), y[i + len] - y[i]);
            }
        }
    }

    const DD corner = d[0];
    const int bsign = beta_power_sign(beta, q);
    DdValue out;
    out.sign = (corner.hi > 0.0 ? 1 : (corner.hi < 0.0 ? -1 : 0)) * bsign;
    if (out.sign == 0 || beta == 0.0) {
        out.sign = beta == 0.0 ? (q == 0 ? 1 : 0) : out.sign;
        out.value = out.sign;
        out.log_magnitude = out.sign != 0 ? 0.0 : -kInf;
        return out;
    }
    out.log_magnitude = q * std::log(std::fabs(beta)) - beta * c + log_abs(corner);
    out.value = pow_int(-beta, q) * std::exp(-beta * c) * corner.to_double();
    if (!std::isfinite(out.value) || out.value == 0.0)
        out.value = out.sign * std::exp(out.log_magnitude);
    if (!std::isfinite(corner.hi)) out.degraded = true;
    return out;
}

double dd_exp_recursive(std::span<const double> inputs, double beta) {
    return dd_exp_recursive_detailed(inputs, beta).value;
}

// ---------------------------------------------------------------------------
// Taylor partial sums (monomial divided differences over shifted inputs)

double dd_exp_taylor(std::span<const double> inputs, double beta, int terms) {
    check_domain(inputs, beta);
    if (terms < 1) throw std::domain_error("dd_exp_taylor: terms must be >= 1");
    const int q = static_cast<int>(inputs.size()) - 1;
    const double c = std::accumulate(inputs.begin(), inputs.end(), 0.0) / inputs.size();
    if (terms - 1 < q) return 0.0;  // every monomial divided difference vanishes

    // h[m]: complete homogeneous symmetric polynomial of degree m over the
    // shifted inputs; the monomial divided difference [u0..uq]^n equals h_{n-q}.
    // Terms decay like (beta*maxdev)^n/n!; degrees far past that point only
    // risk overflowing h, so the stored range is capped there.
    double maxdev = 0.0;
    for (double xi : inputs) maxdev = std::max(maxdev, std::fabs(xi - c));
    const int cutoff = static_cast<int>(std::ceil(2.72 * std::fabs(beta) * maxdev)) + 180;
    const int hmax = std::min(terms - 1 - q, cutoff);
    std::vector<DD> h(hmax + 1, DD{0.0});
    h[0] = DD{1.0};
    int husable = hmax;
    for (double xi : inputs) {
        const DD u = detail::two_sum(xi, -c);
        for (int m = 1; m <= hmax; ++m) h[m] = detail::add(h[m], detail::mul(u, h[m - 1]));
    }
    while (husable > 0 && !std::isfinite(h[husable].hi)) --husable;

    // sum of (-beta)^n h_{n-q} / n!
    DD sum{0.0};
    DD coef{1.0};  // (-beta)^n / n!
    for (int n = 0; n < terms; ++n) {
        if (n >= q) {
            if (n - q > husable) break;
            sum = detail::add(sum, detail::mul(coef, h[n - q]));
        }
        coef = detail::mul(detail::mul(coef, -beta), recip(static_cast<std::size_t>(n) + 1));
    }
    const DD full = detail::mul(exp_dd(detail::mul(-beta, DD{c})), sum);
    return full.to_double();
}

// ---------------------------------------------------------------------------
// incremental table and the production dd_exp

DivDiffTable::DivDiffTable(std::vector<double> energies, double beta)
    : energies_(std::move(energies)), beta_(beta) {
    if (energies_.empty()) throw std::domain_error("DivDiffTable: empty input list");
    if (!std::isfinite(beta_)) throw std::domain_error("DivDiffTable: non-finite beta");
    for (double x : energies_)
        if (!std::isfinite(x)) throw std::domain_error("DivDiffTable: non-finite input");
    rebuild();
}

void DivDiffTable::rebuild() {
    shift_ = std::accumulate(energies_.begin(), energies_.end(), 0.0) / energies_.size();
    double r = 0.0;
    for (double e : energies_) r = std::max(r, std::fabs(-beta_ * (e - shift_)));
    deviation_cap_ = std::max(4.0, 2.0 * r + 2.0);
    const std::size_t k =
        std::min(kMaxTerms, 64 + static_cast<std::size_t>(std::ceil(6.0 * deviation_cap_)));
    g_.assign(std::max(k, energies_.size() + 8), DD{0.0});
    g_[0] = DD{1.0};
    for (std::size_t i = 0; i < energies_.size(); ++i)
        push_shifted(-beta_ * (energies_[i] - shift_), i);
    dirty_ = true;
}

// Append one shifted input; q_new is the order after the append.
// g'_k = (g_k + t * g'_{k-1}) / (q_new + k), ascending k in place.
void DivDiffTable::push_shifted(double t, std::size_t q_new) {
    if (q_new > 0) g_[0] = detail::mul(g_[0], recip(q_new));
    for (std::size_t k = 1; k < g_.size(); ++k)
        g_[k] = detail::mul(detail::add(g_[k], detail::mul(t, g_[k - 1])), recip(q_new + k));
}

// Remove one shifted input; q_old is the order before the removal.
// g'_k = g_k * (q_old + k) - t * g_{k-1}, descending k in place.
void DivDiffTable::drop_shifted(double t, std::size_t q_old) {
    for (std::size_t k = g_.size(); k-- > 1;)
        g_[k] = detail::sub(detail::mul(g_[k], double(q_old + k)), detail::mul(t, g_[k - 1]));
    g_[0] = detail::mul(g_[0], double(q_old));
}

void DivDiffTable::extend(double energy) {
    if (!std::isfinite(energy)) throw std::domain_error("DivDiffTable::extend: non-finite input");
    energies_.push_back(energy);
    const double t = -beta_ * (energy - shift_);
    if (std::fabs(t) > deviation_cap_ || energies_.size() + 8 > g_.size()) {
        rebuild();
        return;
    }
    push_shifted(t, energies_.size() - 1);
    dirty_ = true;
}

void DivDiffTable::remove(std::size_t position) {
    if (energies_.size() < 2)
        throw std::domain_error("DivDiffTable::remove: table must keep at least one input");
    if (position >= energies_.size())
        throw std::out_of_range("DivDiffTable::remove: position out of range");
    const double t = -beta_ * (energies_[position] - shift_);
    energies_.erase(energies_.begin() + static_cast<std::ptrdiff_t>(position));
    drop_shifted(t, energies_.size());
    dirty_ = true;
}

bool DivDiffTable::remove_value(double energy) {
    for (std::size_t i = 0; i < energies_.size(); ++i) {
        if (energies_[i] == energy) {
            remove(i);
            return true;
        }
    }
    return false;
}

void DivDiffTable::evaluate() const {
    DD sum{0.0};
    double max_abs = 0.0;
    // terms decay like R^k/k! past k ~ R; once provably negligible the rest
    // of the stored range cannot change the value or the convergence verdict
    const std::size_t safe_k = energies_.size() + 2 * static_cast<std::size_t>(deviation_cap_);
    bool tail_ok = false;
    std::size_t k = 0;
    int quiet = 0;  // single terms can vanish (h_1 = 0 after mean shift), so
                    // only a run of negligible terms ends the sum early
    for (; k < g_.size(); ++k) {
        sum = detail::add(sum, g_[k]);
        max_abs = std::max(max_abs, detail::abs_hi(g_[k]));
        if (k > safe_k && detail::abs_hi(g_[k]) < 1e-38 * std::fabs(sum.hi)) {
            if (++quiet >= 4) {
                tail_ok = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    const double s = sum.to_double();
    if (!tail_ok) {
        const double tail =
            std::max(detail::abs_hi(g_[g_.size() - 1]), detail::abs_hi(g_[g_.size() - 2]));
        tail_ok = tail <= kTailTol * std::fabs(s);
    }
    const bool cancel_ok = s > 0.0 && max_abs < kCancelBudget * s;
    if (tail_ok && cancel_ok) {
        cached_ = assemble(order(), beta_, shift_, s);
    } else {
        cached_ = dd_exp_recursive_detailed(energies_, beta_);
        cached_.used_fallback = true;
        if (!std::isfinite(cached_.log_magnitude) && cached_.sign != 0) cached_.degraded = true;
        if (beta_ > 0.0 && cached_.sign != beta_power_sign(beta_, order())) cached_.degraded = true;
    }
    dirty_ = false;
}

const DdValue& DivDiffTable::value() const {
    if (dirty_) evaluate();
    return cached_;
}

DivDiffTable table_extend(const DivDiffTable& table, double energy) {
    DivDiffTable copy = table;
    copy.extend(energy);
    return copy;
}

DivDiffTable table_remove(const DivDiffTable& table, std::size_t position) {
    DivDiffTable copy = table;
    copy.remove(position);
    return copy;
}

DdValue dd_exp_detailed(std::span<const double> inputs, double beta) {
    check_domain(inputs, beta);
    const DivDiffTable t(std::vector<double>(inputs.begin(), inputs.end()), beta);
    return t.value();
}

double dd_exp(std::span<const double> inputs, double beta) {
    return dd_exp_detailed(inputs, beta).value;
}

}  // namespace odesign
