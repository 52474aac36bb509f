#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args) {
    const std::string out_path = "/tmp/odesign_cli_out.txt";
    const std::string err_path = "/tmp/odesign_cli_err.txt";
    const std::string cmd = std::string("SOURCE_DATE_EPOCH=7 ") + ODESIGN_CLI_PATH + " " + args +
                            " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WEXITSTATUS(status);
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::string write_temp(const std::string& name, const std::string& contents) {
    const std::string path = "/tmp/odesign_cli_" + name;
    std::ofstream out(path);
    out << contents;
    return path;
}

// data lines only: everything after the leading '#' comment block
std::string data_lines(const std::string& text) {
    std::stringstream in(text), out;
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out << line << "\n";
    return out.str();
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("dd-eval prints value and log magnitude") {
    CliResult r = run_cli("dd-eval --beta 1 --inputs 0,1");
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "-0.63212055882855767"));
    CliResult rec = run_cli("dd-eval --beta 1 --inputs 0,1 --method recursion");
    CHECK(data_lines(rec.out) == data_lines(r.out).substr(0, data_lines(rec.out).size()));
    CliResult tay = run_cli("dd-eval --beta 1 --inputs 0,1 --method taylor --terms 60");
    CHECK(contains(tay.out, "-0.632120558828557"));
}

TEST_CASE("manifest header present on every output") {
    for (const std::string& cmd :
         {std::string("exact --model permcycle:0.5 --beta 1"),
          std::string("spectrum --model qubit:0,1,0,0"),
          std::string("series-sign --model permcycle:0.5 --beta 1 --qmax 24")}) {
        CliResult r = run_cli(cmd);
        CHECK(r.exit_code == 0);
        CHECK(r.out.rfind("# odesign ", 0) == 0);
        CHECK(contains(r.out, "# command: "));
        CHECK(contains(r.out, "# seed: "));
        CHECK(contains(r.out, "# timestamp: 7"));
    }
}

TEST_CASE("exit code 2 on input errors") {
    CHECK(run_cli("exact --model nosuch:1 --beta 1").exit_code == 2);
    CHECK(run_cli("exact --model qutrit:0,-1 --beta 1").exit_code == 2);
    CHECK(run_cli("dd-eval --beta 1 --inputs 0,zz").exit_code == 2);
    CHECK(run_cli("exact --beta 1").exit_code == 2);  // missing --model
    const std::string bad = write_temp("bad_matrix.txt", "2\n0 1 1 0\n1 0 2 0\n");
    CHECK(run_cli("decompose --model file:" + bad).exit_code == 2);
}

TEST_CASE("exit code 4 when the dd escalation is exhausted") {
    // beta so extreme that even the extended-precision recursion overflows
    CliResult r = run_cli("dd-eval --beta 1e6 --inputs -3,3,0");
    CHECK(r.exit_code == 4);
}

TEST_CASE("exit code 3 on infeasible requests") {
    std::string big;  // an 11-site chain exceeds the tfim cap
    for (int i = 0; i < 10; ++i) big += std::to_string(i) + " " + std::to_string(i + 1) + " 1.0\n";
    const std::string lattice = write_temp("big_lattice.txt", big);
    CHECK(run_cli("exact --model tfim:" + lattice + ",1.0 --beta 1").exit_code == 3);
}

TEST_CASE("decompose dump") {
    const std::string y = write_temp("pauli_y.txt", "2\n0 1 0 -1\n1 0 0 1\n");
    CliResult r = run_cli("decompose --model file:" + y);
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "M = 1"));
    CHECK(contains(r.out, "perm (0 1)"));
    CHECK(contains(r.out, "0-1i"));
    CHECK(contains(r.out, "0+1i"));
    CHECK(contains(r.out, "round-trip residual: 0"));

    CliResult q = run_cli("decompose --model qutrit:1.0,1");
    CHECK(contains(q.out, "M = 2"));
    CHECK(contains(q.out, "(0 1 2)"));
    CHECK(contains(q.out, "(0 2 1)"));

    const std::string d = write_temp("diag.txt", "3\n0 0 1 0\n1 1 2 0\n2 2 3 0\n");
    CHECK(contains(run_cli("decompose --model file:" + d).out, "M = 0"));
}

TEST_CASE("exact and series CSV rows") {
    CliResult r = run_cli("exact --model permcycle:0.5 --beta 1");
    CHECK(contains(r.out, "model,beta,Z,Z_stoq,sign,gs_class"));
    CHECK(contains(r.out, "all_same_sign"));
    CliResult s = run_cli("series-sign --model permcycle:0.5 --beta 1 --qmax 30");
    CHECK(contains(s.out, "model,beta,qmax_achieved,Z,abs_sum,sign"));
    // the two sign estimates agree to printed precision scale
    CHECK(contains(s.out, "0.577237"));
    CHECK(contains(r.out, "0.577237"));
}

TEST_CASE("enumerate rows at tiny scale") {
    CliResult r = run_cli("enumerate --model qutrit:0,1 --qmax 3 --beta 1");
    CHECK(r.exit_code == 0);
    const std::string data = data_lines(r.out);
    std::stringstream ss(data);
    std::string line;
    int rows = 0, q0 = 0, q3 = 0;
    std::getline(ss, line);  // header
    CHECK(line == "z0,sequence,q,weight,sign");
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        ++rows;
        if (contains(line, ",-,0,")) ++q0;
        if (contains(line, "1.1.1") || contains(line, "2.2.2")) ++q3;
    }
    CHECK(rows == 15);  // 3 identity + 6 at q=2 + 6 at q=3
    CHECK(q0 == 3);
    CHECK(q3 == 6);
}

TEST_CASE("sample CSV, reruns byte-identical, trace file") {
    const std::string args =
        "--seed 42 sample --model qutrit:0.4,1 --beta 1.5 --samples 20000 --chains 8 "
        "--trace /tmp/odesign_cli_trace.csv";
    CliResult a = run_cli(args);
    CHECK(a.exit_code == 0);
    CHECK(contains(a.out, "model,beta,sign_mean,sign_stderr,cap_hits,chains"));
    const std::string trace_a = slurp("/tmp/odesign_cli_trace.csv");
    CliResult b = run_cli(args);
    CHECK(a.out == b.out);  // manifest pinned by SOURCE_DATE_EPOCH, seed fixed
    CHECK(trace_a == slurp("/tmp/odesign_cli_trace.csv"));
    CHECK(contains(trace_a, "chain,sweep,q,sign,log_abs_weight"));
    // 20000 samples split over 8 chains -> 2500 rows per chain + header
    std::stringstream ss(trace_a);
    std::string line;
    int rows = -1;
    while (std::getline(ss, line)) ++rows;
    CHECK(rows == 20000);
}

TEST_CASE("observable file") {
    const std::string obs = write_temp("obs.txt", "0\n1\n0\n");
    CliResult r = run_cli("--seed 9 sample --model qutrit:pi,1 --beta 1 --samples 20000 "
                          "--observable diag:" +
                          obs);
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "obs_mean"));
    const std::string short_obs = write_temp("obs_short.txt", "0\n1\n");
    CHECK(run_cli("sample --model qutrit:pi,1 --beta 1 --samples 1000 --observable diag:" +
                  short_obs)
              .exit_code == 2);
}

TEST_CASE("report contents") {
    CliResult r = run_cli("--seed 3 report --model permcycle:0.5 --beta 1 --samples 20000");
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "non-stoquastic"));
    CHECK(contains(r.out, "all_same_sign"));
    CHECK(contains(r.out, "exact sign (trace ratio): 0.577"));

    CliResult t = run_cli("--seed 3 report --model qubit:0,1,1,1 --beta 1 --samples 5000");
    CHECK(contains(t.out, "sampled sign: 1 "));

    // non-stoquastic yet sign-problem-free
    const std::string chain = write_temp("chain3.txt", "0 1 1.0\n1 2 1.0\n");
    CliResult f = run_cli("--seed 3 report --model tfim:" + chain + ",1.0 --beta 1 --samples 5000");
    CHECK(contains(f.out, "non-stoquastic"));
    CHECK(contains(f.out, "series sign (q <= 14): 1\n"));
}

TEST_CASE("output file option") {
    const std::string path = "/tmp/odesign_cli_outfile.csv";
    std::remove(path.c_str());
    CliResult r = run_cli("--output " + path + " exact --model qubit:0,1,0,0 --beta 1");
    CHECK(r.exit_code == 0);
    CHECK(r.out.empty());
    const std::string content = slurp(path);
    CHECK(content.rfind("# odesign ", 0) == 0);
    CHECK(contains(content, "model,beta,Z,Z_stoq,sign,gs_class"));
}

TEST_CASE("golden sweep outputs") {
    // qutrit phase sweep (the 64-point, three-beta exact grid)
    CliResult fig3 = run_cli("sweep --model qutrit:PHI,1 --param phi --range 0:6.2832:64 "
                             "--beta 1,2,3 --estimators exact");
    CHECK(fig3.exit_code == 0);
    const std::string golden3 = slurp(std::string(ODESIGN_GOLDEN_DIR) + "/fig3_sweep.csv");
    CHECK(data_lines(fig3.out) == data_lines(golden3));

    // perm-cycle epsilon sweep with exact and series estimators
    CliResult fig4 = run_cli("sweep --model permcycle:EPS --param epsilon --range 0:1:21 "
                             "--beta 1 --estimators exact,series --qmax 40");
    CHECK(fig4.exit_code == 0);
    const std::string golden4 = slurp(std::string(ODESIGN_GOLDEN_DIR) + "/fig4_sweep.csv");
    CHECK(data_lines(fig4.out) == data_lines(golden4));

    // structure: 192 rows for fig3 (64 points x 3 betas), 42 for fig4
    int rows3 = -1, rows4 = -1;
    std::stringstream s3(data_lines(fig3.out)), s4(data_lines(fig4.out));
    std::string line;
    while (std::getline(s3, line))
        if (!line.empty()) ++rows3;
    while (std::getline(s4, line))
        if (!line.empty()) ++rows4;
    CHECK(rows3 == 192);
    CHECK(rows4 == 42);
}

TEST_CASE("beta sweep is monotone for the qutrit worst case") {
    CliResult r = run_cli("sweep --model qutrit:0,1 --param beta --range 0.5:3:11 "
                          "--estimators exact");
    CHECK(r.exit_code == 0);
    std::stringstream ss(data_lines(r.out));
    std::string line;
    std::getline(ss, line);  // header
    double prev = 2.0;
    int rows = 0;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const std::size_t pos = line.rfind(",exact,");
        REQUIRE(pos != std::string::npos);
        const std::string tail = line.substr(pos + 7);
        const double sign = std::stod(tail);
        CHECK(sign < prev);
        prev = sign;
        ++rows;
    }
    CHECK(rows == 11);
}
