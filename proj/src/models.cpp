#include "odesign/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "odesign/errors.hpp"

namespace odesign {

namespace {

constexpr double kPi = 3.14159265358979323846;

void drop_zero_terms(PmrHamiltonian& h) {
    std::erase_if(h.terms, [](const PmrTerm& t) {
        for (const Complex& d : t.diag)
            if (d != Complex{}) return false;
        return true;
    });
}

int pow3(int n) {
    int r = 1;
    for (int i = 0; i < n; ++i) r *= 3;
    return r;
}

}  // namespace

PmrHamiltonian single_qubit(const QubitModelParams& p) {
    for (double a : {p.alpha0, p.alpha1, p.alpha2, p.alpha3})
        if (!std::isfinite(a)) throw std::invalid_argument("single_qubit: non-finite parameter");
    PmrHamiltonian h;
    h.dim = 2;
    h.d0 = {p.alpha0 + p.alpha3, p.alpha0 - p.alpha3};
    PmrTerm t;
    t.perm.map = {1, 0};
    t.diag = {Complex{p.alpha1, -p.alpha2}, Complex{p.alpha1, p.alpha2}};
    h.terms.push_back(std::move(t));
    drop_zero_terms(h);
    return h;
}

PmrHamiltonian qutrit(const QutritModelParams& p) {
    if (!(p.j > 0.0)) throw std::invalid_argument("qutrit: J must be positive");
    if (!std::isfinite(p.phi)) throw std::invalid_argument("qutrit: non-finite phase");
    PmrHamiltonian h;
    h.dim = 3;
    h.d0 = {0.0, p.j, 0.0};
    const Complex up = std::polar(1.0, p.phi);
    PmrTerm t1;
    t1.perm.map = {1, 2, 0};
    t1.diag = {up, up, up};
    PmrTerm t2;
    t2.perm.map = {2, 0, 1};
    t2.diag = {std::conj(up), std::conj(up), std::conj(up)};
    h.terms.push_back(std::move(t1));
    h.terms.push_back(std::move(t2));
    return h;
}

std::array<double, 3> qutrit_sign_free_angles() {
    return {kPi / 3.0, kPi, 5.0 * kPi / 3.0};
}

int qutrit_weight_sign_formula(int n1, int n2, double phi) {
    if (n1 < 0 || n2 < 0 || (n1 + 2 * n2) % 3 != 0)
        throw std::invalid_argument("qutrit_weight_sign_formula: sequence is not closed");
    const double c = std::cos((n1 - n2) * phi);
    if (std::fabs(c) <= 1e-12) return 0;
    const int parity = (n1 + n2) % 2 == 0 ? 1 : -1;
    return c > 0.0 ? parity : -parity;
}

int qutrit_amplitude_sign(int n1, int n2, double phi) {
    if (n1 < 0 || n2 < 0 || (n1 + 2 * n2) % 3 != 0)
        throw std::invalid_argument("qutrit_amplitude_sign: sequence is not closed");
    const double c = std::cos((n1 - n2) * phi);
    if (std::fabs(c) <= 1e-12) return 0;
    return c > 0.0 ? 1 : -1;
}

PmrHamiltonian multi_qutrit(int n_sites, const std::vector<std::pair<int, int>>& edges, double phi,
                            const std::vector<std::array<double, 3>>& site_diag) {
    if (n_sites < 1) throw std::invalid_argument("multi_qutrit: need at least one site");
    if (n_sites > 8) throw InfeasibleError("multi_qutrit: dimension cap 3^8 exceeded");
    if (static_cast<int>(site_diag.size()) != n_sites)
        throw std::invalid_argument("multi_qutrit: one diagonal triple per site required");
    const int dim = pow3(n_sites);
    PmrHamiltonian h;
    h.dim = dim;
    h.d0.resize(dim);
    for (int z = 0; z < dim; ++z) {
        double e = 0.0;
        int rest = z;
        for (int s = 0; s < n_sites; ++s) {
            e += site_diag[s][rest % 3];
            rest /= 3;
        }
        h.d0[z] = e;
    }

    const Complex up = std::polar(1.0, phi);
    auto hop = [&](int z, int site, int step) {
        int base = 1;
        for (int s = 0; s < site; ++s) base *= 3;
        const int digit = (z / base) % 3;
        return z + base * (((digit + step) % 3) - digit);
    };
    for (auto [i, j] : edges) {
        if (i < 0 || j < 0 || i >= n_sites || j >= n_sites || i == j)
            throw std::invalid_argument("multi_qutrit: invalid edge");
        PmrTerm a;  // P1 on i, P2 on j
        a.perm.map.resize(dim);
        a.diag.assign(dim, up);
        PmrTerm b;  // the inverse hop
        b.perm.map.resize(dim);
        b.diag.assign(dim, std::conj(up));
        for (int z = 0; z < dim; ++z) {
            a.perm.map[z] = hop(hop(z, i, 1), j, 2);
            b.perm.map[z] = hop(hop(z, i, 2), j, 1);
        }
        for (const PmrTerm& t : h.terms)
            if (t.perm == a.perm) throw std::invalid_argument("multi_qutrit: duplicate edge");
        h.terms.push_back(std::move(a));
        h.terms.push_back(std::move(b));
    }
    return h;
}

namespace {

void check_sites(const LatticeParams& p, int cap, const char* who) {
    if (p.n_sites < 1) throw std::invalid_argument(std::string(who) + ": need at least one site");
    if (p.n_sites > cap) throw InfeasibleError(std::string(who) + ": dimension cap exceeded");
    for (const auto& [i, j, v] : p.couplings)
        if (i < 0 || j < 0 || i >= p.n_sites || j >= p.n_sites || i == j)
            throw std::invalid_argument(std::string(who) + ": invalid coupling pair");
    if (!p.fields.empty() && static_cast<int>(p.fields.size()) != p.n_sites)
        throw std::invalid_argument(std::string(who) + ": field list length mismatch");
}

std::vector<double> ising_diagonal(const LatticeParams& p) {
    const int dim = 1 << p.n_sites;
    std::vector<double> d0(dim, 0.0);
    for (int z = 0; z < dim; ++z) {
        double e = 0.0;
        auto spin = [&](int s) { return 1.0 - 2.0 * ((z >> s) & 1); };
        for (const auto& [i, j, v] : p.couplings) e += v * spin(i) * spin(j);
        for (std::size_t s = 0; s < p.fields.size(); ++s) e += p.fields[s] * spin(static_cast<int>(s));
        d0[z] = e;
    }
    return d0;
}

}  // namespace

PmrHamiltonian tfim(const LatticeParams& p) {
    check_sites(p, 10, "tfim");
    const int dim = 1 << p.n_sites;
    PmrHamiltonian h;
    h.dim = dim;
    h.d0 = ising_diagonal(p);
    for (int s = 0; s < p.n_sites; ++s) {
        PmrTerm t;
        t.perm.map.resize(dim);
        for (int z = 0; z < dim; ++z) t.perm.map[z] = z ^ (1 << s);
        t.diag.assign(dim, Complex{p.gamma, 0.0});
        h.terms.push_back(std::move(t));
    }
    drop_zero_terms(h);
    return h;
}

PmrHamiltonian xx_bipartite(const LatticeParams& p) {
    check_sites(p, 10, "xx_bipartite");
    for (const auto& [i, j] : p.edges)
        if (i < 0 || j < 0 || i >= p.n_sites || j >= p.n_sites || i == j)
            throw std::invalid_argument("xx_bipartite: invalid edge");

    // two-color the edge graph (or verify the supplied coloring)
    std::vector<int> color(p.n_sites, -1);
    if (p.bipartition) {
        if (static_cast<int>(p.bipartition->size()) != p.n_sites)
            throw std::invalid_argument("xx_bipartite: bipartition length mismatch");
        color = *p.bipartition;
    } else {
        for (int start = 0; start < p.n_sites; ++start) {
            if (color[start] != -1) continue;
            color[start] = 0;
            std::vector<int> queue{start};
            while (!queue.empty()) {
                const int u = queue.back();
                queue.pop_back();
                for (const auto& [a, b] : p.edges) {
                    if (a != u && b != u) continue;
                    const int v = a == u ? b : a;
                    if (color[v] == -1) {
                        color[v] = 1 - color[u];
                        queue.push_back(v);
                    }
                }
            }
        }
    }
    for (const auto& [i, j] : p.edges)
        if (color[i] == color[j])
            throw std::invalid_argument(
                "xx_bipartite: edge set is not bipartite (odd cycle through sites " +
                std::to_string(i) + " and " + std::to_string(j) + ")");

    const int dim = 1 << p.n_sites;
    PmrHamiltonian h;
    h.dim = dim;
    h.d0 = ising_diagonal(p);
    for (const auto& [i, j] : p.edges) {
        PmrTerm t;
        t.perm.map.resize(dim);
        const int mask = (1 << i) | (1 << j);
        for (int z = 0; z < dim; ++z) t.perm.map[z] = z ^ mask;
        t.diag.assign(dim, Complex{p.gamma, 0.0});
        for (const PmrTerm& prev : h.terms)
            if (prev.perm == t.perm) throw std::invalid_argument("xx_bipartite: duplicate edge");
        h.terms.push_back(std::move(t));
    }
    drop_zero_terms(h);
    return h;
}

PmrHamiltonian perm_cycle(const PermCycleParams& p) {
    if (!std::isfinite(p.epsilon)) throw std::invalid_argument("perm_cycle: non-finite epsilon");
    PmrHamiltonian h;
    h.dim = 4;
    h.d0.assign(4, 0.0);
    for (int power = 1; power <= 3; ++power) {
        PmrTerm t;
        t.perm.map.resize(4);
        for (int z = 0; z < 4; ++z) t.perm.map[z] = (z + power) % 4;
        t.diag.assign(4, power == 2 ? Complex{p.epsilon, 0.0} : Complex{-1.0, 0.0});
        h.terms.push_back(std::move(t));
    }
    drop_zero_terms(h);
    return h;
}

double perm_cycle_sign_closed_form(double epsilon, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("perm_cycle_sign_closed_form: beta must be > 0");
    const double num =
        2.0 * std::exp(2.0 * beta * (epsilon + 1.0)) + std::exp(4.0 * beta) + 1.0;
    const double den = std::exp(2.0 * beta * epsilon) +
                       std::exp(2.0 * beta * (epsilon + 2.0)) + 2.0 * std::exp(2.0 * beta);
    return num / den;
}

// --- parsing ----------------------------------------------------------------

double parse_angle(const std::string& token) {
    std::string s = token;
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
            s.end());
    if (s.empty()) throw std::invalid_argument("parse_angle: empty token");
    const std::size_t pos = s.find("pi");
    if (pos == std::string::npos) {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("parse_angle: trailing characters in '" + s + "'");
        return v;
    }
    std::string pre = s.substr(0, pos);
    std::string post = s.substr(pos + 2);
    double coef = 1.0;
    if (!pre.empty() && pre.back() == '*') pre.pop_back();
    if (pre == "-") {
        coef = -1.0;
    } else if (pre == "+" || pre.empty()) {
        coef = 1.0;
    } else {
        std::size_t used = 0;
        coef = std::stod(pre, &used);
        if (used != pre.size()) throw std::invalid_argument("parse_angle: bad multiplier in '" + s + "'");
    }
    double div = 1.0;
    if (!post.empty()) {
        if (post[0] != '/') throw std::invalid_argument("parse_angle: expected '/' in '" + s + "'");
        std::size_t used = 0;
        div = std::stod(post.substr(1), &used);
        if (used != post.size() - 1 || div == 0.0)
            throw std::invalid_argument("parse_angle: bad divisor in '" + s + "'");
    }
    return coef * kPi / div;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("malformed number '" + s + "'");
    return v;
}

}  // namespace

LatticeParams load_lattice_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open lattice file '" + path + "'");
    LatticeParams p;
    std::map<int, double> fields;
    std::string line;
    int max_site = -1;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "h") {
            int site;
            double value;
            if (!(ls >> site >> value))
                throw std::invalid_argument("malformed field line in '" + path + "'");
            fields[site] = value;
            max_site = std::max(max_site, site);
        } else {
            int i = 0, j = 0;
            double v = 0.0;
            std::istringstream entry(line);
            if (!(entry >> i >> j >> v))
                throw std::invalid_argument("malformed coupling line in '" + path + "'");
            p.couplings.emplace_back(i, j, v);
            p.edges.emplace_back(i, j);
            max_site = std::max({max_site, i, j});
        }
    }
    p.n_sites = max_site + 1;
    if (p.n_sites < 1) throw std::invalid_argument("lattice file '" + path + "' declares no sites");
    if (!fields.empty()) {
        p.fields.assign(p.n_sites, 0.0);
        for (const auto& [site, value] : fields) p.fields[site] = value;
    }
    return p;
}

DenseMatrix load_dense_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open matrix file '" + path + "'");
    int n = 0;
    if (!(in >> n) || n < 1) throw std::invalid_argument("matrix file '" + path + "': bad dimension");
    DenseMatrix m(n);
    int r, c;
    double re, im;
    while (in >> r >> c >> re >> im) {
        if (r < 0 || c < 0 || r >= n || c >= n)
            throw std::invalid_argument("matrix file '" + path + "': index out of range");
        m.at(r, c) = Complex{re, im};
    }
    return m;
}

void write_dense_matrix(std::ostream& out, const DenseMatrix& m) {
    const int n = m.dim();
    out << n << "\n";
    char buf[96];
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const Complex v = m.at(r, c);
            std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g\n", r, c, v.real(), v.imag());
            out << buf;
        }
}

ParsedModel parse_model_spec(const std::string& spec) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("model spec '" + spec + "' is missing ':'");
    const std::string name = spec.substr(0, colon);
    const std::vector<std::string> args = split(spec.substr(colon + 1), ',');

    ParsedModel out;
    out.descriptor = spec;
    if (name == "qubit") {
        if (args.size() != 4) throw std::invalid_argument("qubit spec needs a0,a1,a2,a3");
        out.h = single_qubit(
            {parse_double(args[0]), parse_double(args[1]), parse_double(args[2]), parse_double(args[3])});
    } else if (name == "qutrit") {
        if (args.size() != 2) throw std::invalid_argument("qutrit spec needs phi,J");
        out.h = qutrit({parse_angle(args[0]), parse_double(args[1])});
    } else if (name == "multiqutrit") {
        if (args.size() != 3) throw std::invalid_argument("multiqutrit spec needs <edge-file>,phi,J");
        const LatticeParams lat = load_lattice_file(args[0]);
        const double j = parse_double(args[2]);
        std::vector<std::array<double, 3>> site_diag(lat.n_sites, {0.0, j, 0.0});
        out.h = multi_qutrit(lat.n_sites, lat.edges, parse_angle(args[1]), site_diag);
    } else if (name == "tfim") {
        if (args.size() != 2) throw std::invalid_argument("tfim spec needs <lattice-file>,gamma");
        LatticeParams lat = load_lattice_file(args[0]);
        lat.gamma = parse_double(args[1]);
        out.h = tfim(lat);
    } else if (name == "xx") {
        if (args.size() != 2) throw std::invalid_argument("xx spec needs <lattice-file>,gamma");
        LatticeParams lat = load_lattice_file(args[0]);
        lat.gamma = parse_double(args[1]);
        out.h = xx_bipartite(lat);
    } else if (name == "permcycle") {
        if (args.size() != 1) throw std::invalid_argument("permcycle spec needs eps");
        out.h = perm_cycle({parse_double(args[0])});
    } else if (name == "file") {
        if (args.size() != 1) throw std::invalid_argument("file spec needs a path");
        out.h = decompose(load_dense_matrix(args[0]));
    } else {
        throw std::invalid_argument("unknown model '" + name + "'");
    }
    return out;
}

}  // namespace odesign
