// odesign: quantify the quantum Monte Carlo sign problem of small
// Hamiltonians through their permutation-operator series expansion.

#include <CLI11.hpp>

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "odesign/divdiff.hpp"
#include "odesign/errors.hpp"
#include "odesign/exact.hpp"
#include "odesign/expansion.hpp"
#include "odesign/matrix.hpp"
#include "odesign/models.hpp"
#include "odesign/pmr.hpp"
#include "odesign/sampler.hpp"

using namespace odesign;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_complex(Complex v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gi", v.real(), v.imag());
    return buf;
}

struct Global {
    std::string output;
    double tol = 1e-12;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string command_line;
};

// output stream with the run manifest header; byte-stable when
// SOURCE_DATE_EPOCH pins the timestamp
class Out {
  public:
    Out(const Global& g, const std::string& model_desc) {
        if (!g.output.empty()) {
            file_.open(g.output);
            if (!file_) throw std::invalid_argument("cannot open output file '" + g.output + "'");
        }
        std::ostream& o = stream();
        long long stamp = static_cast<long long>(std::time(nullptr));
        if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) stamp = std::atoll(sde);
        o << "# odesign " << ODESIGN_VERSION << "\n";
        o << "# command: " << g.command_line << "\n";
        o << "# seed: " << g.seed << "\n";
        o << "# model: " << (model_desc.empty() ? "-" : model_desc) << "\n";
        o << "# timestamp: " << stamp << "\n";
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

  private:
    std::ofstream file_;
};

std::vector<double> parse_csv_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument("malformed number '" + tok + "'");
    }
    if (out.empty()) throw std::invalid_argument("empty number list");
    return out;
}

std::string cycle_notation(const Permutation& p) {
    std::string s;
    std::vector<char> seen(p.map.size(), 0);
    for (int i = 0; i < p.dim(); ++i) {
        if (seen[i]) continue;
        int j = i;
        std::string cyc;
        do {
            seen[j] = 1;
            cyc += (cyc.empty() ? "" : " ") + std::to_string(j);
            j = p.apply(j);
        } while (j != i);
        s += "(" + cyc + ")";
    }
    return s;
}

std::string sequence_label(const std::vector<int>& seq) {
    if (seq.empty()) return "-";
    std::string s;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(seq[i] + 1);  // terms are numbered 1..M for output
    }
    return s;
}

int threads_from_env(int cli_threads) {
    if (const char* env = std::getenv("ODESIGN_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return cli_threads;
}

// ---------------------------------------------------------------------------

void cmd_dd_eval(const Global& g, double beta, const std::string& inputs_csv,
                 const std::string& method, int terms) {
    const std::vector<double> inputs = parse_csv_doubles(inputs_csv);
    DdValue v;
    if (method == "sum") {
        v = dd_exp_detailed(inputs, beta);
    } else if (method == "recursion") {
        v = dd_exp_recursive_detailed(inputs, beta);
    } else if (method == "taylor") {
        const double val = dd_exp_taylor(inputs, beta, terms);
        v.value = val;
        v.sign = val > 0 ? 1 : (val < 0 ? -1 : 0);
        v.log_magnitude = std::log(std::fabs(val));
    } else {
        throw std::invalid_argument("unknown method '" + method + "'");
    }
    if (v.degraded) throw NumericalError("divided-difference escalation exhausted");
    Out out(g, "");
    out.stream() << fmt(v.value) << " " << fmt(v.log_magnitude) << "\n";
}

void cmd_decompose(const Global& g, const std::string& model) {
    PmrHamiltonian h;
    double residual = 0.0;
    if (model.rfind("file:", 0) == 0) {
        const DenseMatrix m = load_dense_matrix(model.substr(5));
        h = decompose(m, g.tol);
        residual = max_entry_difference(recompose(h), m);
    } else {
        h = parse_model_spec(model).h;
    }
    Out out(g, model);
    std::ostream& o = out.stream();
    o << "dimension: " << h.dim << "\n";
    o << "M = " << h.term_count() << "\n";
    o << "D0:";
    for (double e : h.d0) o << " " << fmt(e);
    o << "\n";
    for (int j = 0; j < h.term_count(); ++j) {
        o << "term " << (j + 1) << ": perm " << cycle_notation(h.terms[j].perm) << " diag";
        for (const Complex& d : h.terms[j].diag) o << " " << fmt_complex(d);
        o << "\n";
    }
    o << "round-trip residual: " << fmt(residual) << "\n";
}

void cmd_exact(const Global& g, const std::string& model, double beta) {
    const ParsedModel m = parse_model_spec(model);
    const DenseMatrix full = recompose(m.h);
    const double z = trace_exp(full, beta);
    const double zs = trace_exp(recompose(stoquasticize(m.h)), beta);
    Out out(g, model);
    out.stream() << "model,beta,Z,Z_stoq,sign,gs_class\n";
    out.stream() << "\"" << model << "\"," << fmt(beta) << "," << fmt(z) << "," << fmt(zs) << ","
                 << fmt(z / zs) << "," << to_string(ground_state_sign_class(full)) << "\n";
}

void cmd_spectrum(const Global& g, const std::string& model) {
    const ParsedModel m = parse_model_spec(model);
    const Spectrum s = diagonalize(recompose(m.h));
    Out out(g, model);
    for (double e : s.eigenvalues) out.stream() << fmt(e) << "\n";
}

void cmd_series_sign(const Global& g, const std::string& model, double beta, int qmax,
                     double tail_tol) {
    const ParsedModel m = parse_model_spec(model);
    const SeriesResult r = series_partition(m.h, beta, qmax, tail_tol);
    if (!r.abs_sum_exact)
        throw InfeasibleError("series-sign: |W| mass needs the enumeration engine at this q_max");
    if (r.abs_sum == 0.0) throw NumericalError("series-sign: all weights vanish");
    Out out(g, model);
    out.stream() << "model,beta,qmax_achieved,Z,abs_sum,sign\n";
    out.stream() << "\"" << model << "\"," << fmt(beta) << "," << r.achieved_q << "," << fmt(r.z) << ","
                 << fmt(r.abs_sum) << "," << fmt(r.z / r.abs_sum) << "\n";
    if (r.truncated)
        std::cerr << "warning: adaptive tail criterion unmet at q_max = " << qmax << "\n";
}

void cmd_enumerate(const Global& g, const std::string& model, int qmax, double beta) {
    const ParsedModel m = parse_model_spec(model);
    Out out(g, model);
    out.stream() << "z0,sequence,q,weight,sign\n";
    enumerate_closed(m.h, qmax, [&](const Configuration& c) {
        const Gbw w = weight(m.h, c, beta);
        out.stream() << c.z0 << "," << sequence_label(c.sequence) << "," << c.order() << ","
                     << fmt(w.real_weight) << "," << w.sign << "\n";
    });
}

void cmd_sample(const Global& g, const std::string& model, double beta, std::uint64_t samples,
                int chains, int qcap, std::uint64_t burn_in, int thinning,
                const std::string& observable, const std::string& trace_path) {
    const ParsedModel m = parse_model_spec(model);
    SamplerParams p;
    p.beta = beta;
    p.n_samples = samples;
    p.n_chains = chains;
    p.q_cap = qcap;
    p.burn_in = burn_in;
    p.thinning = thinning;
    p.seed = g.seed;
    p.threads = threads_from_env(g.threads);

    std::vector<double> obs;
    bool has_obs = false;
    if (!observable.empty()) {
        if (observable.rfind("diag:", 0) != 0)
            throw std::invalid_argument("observable must be diag:<file>");
        std::ifstream in(observable.substr(5));
        if (!in) throw std::invalid_argument("cannot open observable file");
        double v;
        while (in >> v) obs.push_back(v);
        has_obs = true;
    }

    // per-chain trace rows are buffered and written in chain order
    std::vector<std::vector<std::string>> trace(chains);
    SampleHook hook;
    if (!trace_path.empty()) {
        hook = [&](int chain, std::uint64_t index, const ChainSample& s) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%d,%" PRIu64 ",%d,%d,%s", chain,
                          static_cast<std::uint64_t>(index), s.order, s.sign,
                          fmt(s.log_abs_weight).c_str());
            trace[chain].push_back(buf);
        };
    }

    const SamplerReport rep = run(m.h, p, has_obs ? &obs : nullptr, hook);

    Out out(g, model);
    out.stream() << "model,beta,sign_mean,sign_stderr,cap_hits,chains";
    if (has_obs) out.stream() << ",obs_mean,obs_stderr";
    out.stream() << "\n";
    out.stream() << "\"" << model << "\"," << fmt(beta) << "," << fmt(rep.sign.mean) << ","
                 << fmt(rep.sign.std_error) << "," << rep.cap_hits << "," << rep.chains;
    if (has_obs) out.stream() << "," << fmt(rep.observable->mean) << ","
                              << fmt(rep.observable->std_error);
    out.stream() << "\n";
    if (rep.cap_warning)
        std::cerr << "warning: expansion-order cap was hit by a fraction "
                  << fmt(rep.cap_hit_fraction) << " of samples\n";
    if (rep.sign_collapse_warning)
        std::cerr << "warning: sign collapse; <sgn> within 2 standard errors of zero\n";

    if (!trace_path.empty()) {
        std::ofstream tf(trace_path);
        if (!tf) throw std::invalid_argument("cannot open trace file");
        tf << "chain,sweep,q,sign,log_abs_weight\n";
        for (const auto& rows : trace)
            for (const std::string& row : rows) tf << row << "\n";
    }
}

struct SweepJob {
    double value;
    double beta;
    std::string model;
};

void cmd_sweep(const Global& g, std::string model, const std::string& param,
               const std::string& range, const std::string& betas_csv,
               const std::string& estimators_csv, int qmax, double tail_tol,
               std::uint64_t samples) {
    // range a:b:points
    const std::vector<std::string> parts = [&] {
        std::vector<std::string> p;
        std::stringstream ss(range);
        std::string tok;
        while (std::getline(ss, tok, ':')) p.push_back(tok);
        return p;
    }();
    if (parts.size() != 3) throw std::invalid_argument("range must be start:stop:points");
    const double start = parse_angle(parts[0]);
    const double stop = parse_angle(parts[1]);
    const int points = std::stoi(parts[2]);
    if (points < 2 || !(start < stop)) throw std::invalid_argument("range needs points >= 2, start < stop");

    std::vector<std::string> estimators;
    {
        std::stringstream ss(estimators_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) estimators.push_back(tok);
    }
    for (const std::string& e : estimators)
        if (e != "exact" && e != "series" && e != "sample")
            throw std::invalid_argument("unknown estimator '" + e + "'");

    const bool beta_sweep = param == "beta";
    std::vector<double> betas = beta_sweep ? std::vector<double>{} : parse_csv_doubles(betas_csv);

    // the swept parameter appears as an uppercase placeholder in the model
    std::string token = param;
    for (char& c : token) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const std::string short_token = token.substr(0, 3);  // EPSILON may appear as EPS

    std::vector<SweepJob> jobs;
    for (int i = 0; i < points; ++i) {
        const double v = start + (stop - start) * i / (points - 1);
        std::string m = model;
        for (const std::string& t : {token, short_token}) {
            const std::size_t pos = m.find(t);
            if (pos != std::string::npos) {
                m = m.substr(0, pos) + fmt(v) + m.substr(pos + t.size());
                break;
            }
        }
        if (beta_sweep) {
            jobs.push_back(SweepJob{v, v, m});
        } else {
            for (double b : betas) jobs.push_back(SweepJob{v, b, m});
        }
    }

    // grid points dispatch to a worker pool; rows are buffered per point and
    // written in grid order regardless of completion order
    std::vector<std::vector<std::string>> rows(jobs.size());
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                const SweepJob& job = jobs[i];
                const ParsedModel m = parse_model_spec(job.model);
                for (const std::string& est : estimators) {
                    std::string sign, err;
                    if (est == "exact") {
                        sign = fmt(exact_sign(m.h, job.beta));
                    } else if (est == "series") {
                        sign = fmt(series_sign(m.h, job.beta, qmax, tail_tol));
                    } else {
                        SamplerParams p;
                        p.beta = job.beta;
                        p.n_samples = samples;
                        p.n_chains = 8;
                        p.seed = g.seed + 1000003ull * i;
                        p.threads = 1;
                        const SamplerReport rep = run(m.h, p);
                        sign = fmt(rep.sign.mean);
                        err = fmt(rep.sign.std_error);
                    }
                    rows[i].push_back(fmt(job.value) + "," + fmt(job.beta) + "," + est + "," +
                                      sign + "," + err);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    const int pool = std::max(1, std::min<int>(threads_from_env(g.threads),
                                               static_cast<int>(jobs.size())));
    if (pool == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < pool; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    Out out(g, model);
    out.stream() << "parameter_value,beta,estimator,sign,stderr\n";
    for (const auto& point_rows : rows)
        for (const std::string& r : point_rows) out.stream() << r << "\n";
}

void cmd_report(const Global& g, const std::string& model, double beta, std::uint64_t samples,
                int qmax) {
    const ParsedModel m = parse_model_spec(model);
    const DenseMatrix full = recompose(m.h);
    Out out(g, model);
    std::ostream& o = out.stream();
    o << "model: " << model << "\n";
    o << "dimension: " << m.h.dim << "\n";
    o << "beta: " << fmt(beta) << "\n";
    o << "stoquasticity: " << (is_stoquastic(full, g.tol) ? "stoquastic" : "non-stoquastic")
      << "\n";
    o << "off-diagonal terms: M = " << m.h.term_count() << "\n";
    for (int j = 0; j < m.h.term_count(); ++j)
        o << "  term " << (j + 1) << ": perm " << cycle_notation(m.h.terms[j].perm) << "\n";

    const double z = trace_exp(full, beta);
    const double zs = trace_exp(recompose(stoquasticize(m.h)), beta);
    o << "exact sign (trace ratio): " << fmt(z / zs) << "\n";

    try {
        const SeriesResult r = series_partition(m.h, beta, qmax, 1e-10);
        if (r.abs_sum_exact && r.abs_sum > 0.0) {
            o << "series sign (q <= " << r.achieved_q << "): " << fmt(r.z / r.abs_sum) << "\n";
            if (r.truncated) o << "warning: series tail criterion unmet at q_max = " << qmax << "\n";
        } else {
            o << "series sign: unavailable at this scale\n";
        }
    } catch (const InfeasibleError&) {
        o << "series sign: unavailable at this scale\n";
    }

    SamplerParams p;
    p.beta = beta;
    p.n_samples = samples;
    p.seed = g.seed;
    p.threads = threads_from_env(g.threads);
    const SamplerReport rep = run(m.h, p);
    o << "sampled sign: " << fmt(rep.sign.mean) << " +/- " << fmt(rep.sign.std_error)
      << " (chains " << rep.chains << ", cap hits " << rep.cap_hits << ")\n";

    o << "ground state: " << to_string(ground_state_sign_class(full)) << "\n";
    if (rep.sign_collapse_warning) o << "warning: sign collapse in the sampled estimate\n";
    if (rep.cap_warning) o << "warning: order cap hit fraction " << fmt(rep.cap_hit_fraction) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    Global g;
    for (int i = 0; i < argc; ++i) {
        if (i) g.command_line += " ";
        g.command_line += argv[i];
    }

    CLI::App app{"off-diagonal series expansion sign-problem toolkit"};
    app.require_subcommand(1);
    app.add_option("--output", g.output, "output file (default stdout)")->capture_default_str();
    app.add_option("--tol", g.tol, "hermiticity/stoquasticity tolerance")->capture_default_str();
    app.add_option("--seed", g.seed, "master RNG seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (ODESIGN_THREADS overrides)")
        ->capture_default_str();
    app.fallthrough();

    // dd-eval
    double dd_beta = 1.0;
    std::string dd_inputs, dd_method = "sum";
    int dd_terms = 500;
    CLI::App* dd = app.add_subcommand("dd-eval", "evaluate e^{-beta[x0,...,xq]}");
    dd->add_option("--beta", dd_beta)->required();
    dd->add_option("--inputs", dd_inputs)->required();
    dd->add_option("--method", dd_method)->check(CLI::IsMember({"sum", "recursion", "taylor"}));
    dd->add_option("--terms", dd_terms);

    std::string model;
    double beta = 1.0;
    int qmax = 14;
    double tail_tol = 1e-10;

    CLI::App* dec = app.add_subcommand("decompose", "permutation-operator form of a model");
    dec->add_option("--model", model)->required();

    CLI::App* exa = app.add_subcommand("exact", "exact traces and the trace-ratio sign");
    exa->add_option("--model", model)->required();
    exa->add_option("--beta", beta)->required();

    CLI::App* spec_cmd = app.add_subcommand("spectrum", "eigenvalues, one per line");
    spec_cmd->add_option("--model", model)->required();

    CLI::App* ser = app.add_subcommand("series-sign", "truncated-series Z, |W| mass and sign");
    ser->add_option("--model", model)->required();
    ser->add_option("--beta", beta)->required();
    ser->add_option("--qmax", qmax)->capture_default_str();
    ser->add_option("--tail-tol", tail_tol)->capture_default_str();

    CLI::App* enu = app.add_subcommand("enumerate", "closed configurations at tiny scale");
    enu->add_option("--model", model)->required();
    enu->add_option("--qmax", qmax)->required();
    enu->add_option("--beta", beta)->capture_default_str();

    std::uint64_t samples = 100000, burn_in = 2000;
    int chains = 8, qcap = 30, thinning = 2;
    std::string observable, trace_path;
    CLI::App* sam = app.add_subcommand("sample", "Markov-chain estimate of <sgn>");
    sam->add_option("--model", model)->required();
    sam->add_option("--beta", beta)->required();
    sam->add_option("--samples", samples)->capture_default_str();
    sam->add_option("--chains", chains)->capture_default_str();
    sam->add_option("--qcap", qcap)->capture_default_str();
    sam->add_option("--burn-in", burn_in)->capture_default_str();
    sam->add_option("--thinning", thinning)->capture_default_str();
    sam->add_option("--observable", observable, "diag:<file>");
    sam->add_option("--trace", trace_path, "per-chain trace CSV");

    std::string param, range, betas_csv = "1", estimators = "exact";
    CLI::App* swe = app.add_subcommand("sweep", "parameter sweeps of the average sign");
    swe->add_option("--model", model)->required();
    swe->add_option("--param", param)->required()->check(CLI::IsMember({"phi", "beta", "epsilon", "gamma"}));
    swe->add_option("--range", range, "start:stop:points")->required();
    swe->add_option("--beta", betas_csv, "comma list of beta values");
    swe->add_option("--estimators", estimators, "subset of exact,series,sample");
    swe->add_option("--qmax", qmax)->capture_default_str();
    swe->add_option("--tail-tol", tail_tol)->capture_default_str();
    swe->add_option("--samples", samples)->capture_default_str();

    CLI::App* rep = app.add_subcommand("report", "human-readable sign-problem report");
    rep->add_option("--model", model)->required();
    rep->add_option("--beta", beta)->required();
    rep->add_option("--samples", samples)->capture_default_str();
    rep->add_option("--qmax", qmax)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (dd->parsed()) cmd_dd_eval(g, dd_beta, dd_inputs, dd_method, dd_terms);
        if (dec->parsed()) cmd_decompose(g, model);
        if (exa->parsed()) cmd_exact(g, model, beta);
        if (spec_cmd->parsed()) cmd_spectrum(g, model);
        if (ser->parsed()) cmd_series_sign(g, model, beta, qmax, tail_tol);
        if (enu->parsed()) cmd_enumerate(g, model, qmax, beta);
        if (sam->parsed())
            cmd_sample(g, model, beta, samples, chains, qcap, burn_in, thinning, observable,
                       trace_path);
        if (swe->parsed())
            cmd_sweep(g, model, param, range, betas_csv, estimators, qmax, tail_tol, samples);
        if (rep->parsed()) cmd_report(g, model, beta, samples, qmax);
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
