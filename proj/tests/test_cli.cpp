#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string bin_path() {
    const char* p = std::getenv("KFPLAB_BIN");
    return p ? p : "./kfplab";
}

struct RunResult {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_tool(const std::string& args) {
    const fs::path outp = "cli_work/stdout.txt", errp = "cli_work/stderr.txt";
    fs::create_directories("cli_work");
    const std::string cmd =
        bin_path() + " " + args + " >" + outp.string() + " 2>" + errp.string();
    const int rc = std::system(cmd.c_str());
    RunResult r;
    if (rc != -1 && WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
    r.out = slurp(outp);
    r.err = slurp(errp);
    return r;
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// rows of a comma-separated table, header dropped
std::vector<std::vector<double>> csv_rows(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_header(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

} // namespace

TEST_CASE("the tool reports usage and refuses bad invocations") {
    RunResult help = run_tool("--help");
    CHECK(help.code == 0);
    CHECK(help.out.find("spectrum") != std::string::npos);
    CHECK(help.out.find("verify") != std::string::npos);

    CHECK(run_tool("").code == 2);
    CHECK(run_tool("frobnicate").code == 2);
    CHECK(run_tool("spectrum").code == 2);
    CHECK(run_tool("spectrum --config cli_work/absent.cfg").code == 2);

    write_file("cli_work/bad.cfg", "grid.N_v = 16\nthis line is not a setting\n");
    RunResult bad = run_tool("spectrum --config cli_work/bad.cfg --out cli_work/bad");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("bad.cfg:2") != std::string::npos);

    write_file("cli_work/min.cfg", "grid.N_v = 16\nxi_list = 0\nl_max = 1\n");
    CHECK(run_tool("spectrum --config cli_work/min.cfg --out cli_work/min --threads 0").code
          == 2);
}

TEST_CASE("spectrum sweeps write deterministic tables") {
    write_file("cli_work/spec.cfg", "grid.N_v = 64\nxi_list = 0 1\nl_max = 3\n");
    RunResult r = run_tool("spectrum --config cli_work/spec.cfg --out cli_work/spec_a");
    CHECK(r.code == 0);
    CHECK(csv_header("cli_work/spec_a/spectrum.csv") == "xi,l,re,im,defect");
    auto rows = csv_rows("cli_work/spec_a/spectrum.csv");
    REQUIRE(rows.size() == 8);
    double worst64 = 0.0;
    for (const auto& row : rows) {
        REQUIRE(row.size() == 5);
        worst64 = std::max(worst64, row[4]);
    }
    CHECK(worst64 <= 1e-6);

    // identical config, separate run: byte-identical output
    CHECK(run_tool("spectrum --config cli_work/spec.cfg --out cli_work/spec_b").code == 0);
    CHECK(slurp("cli_work/spec_a/spectrum.csv") == slurp("cli_work/spec_b/spectrum.csv"));

    // empty sweep: header only
    write_file("cli_work/spec_empty.cfg", "grid.N_v = 16\nxi_list =\n");
    CHECK(run_tool("spectrum --config cli_work/spec_empty.cfg --out cli_work/spec_e").code
          == 0);
    CHECK(slurp("cli_work/spec_e/spectrum.csv") == "xi,l,re,im,defect\n");

    // a coarser velocity basis degrades the defect column
    write_file("cli_work/spec8.cfg", "grid.N_v = 8\nxi_list = 0 1\nl_max = 3\n");
    CHECK(run_tool("spectrum --config cli_work/spec8.cfg --out cli_work/spec8").code == 0);
    double worst8 = 0.0;
    for (const auto& row : csv_rows("cli_work/spec8/spectrum.csv"))
        worst8 = std::max(worst8, row[4]);
    CHECK(worst8 > worst64);
}

TEST_CASE("pseudospectrum grids and ratio sweeps are emitted") {
    write_file("cli_work/pseudo.cfg",
               "grid.N_v = 24\n"
               "pseudo.xi = 1\n"
               "pseudo.re_list = -1000 -10\n"
               "pseudo.im_list = 0 5\n"
               "ratio.xi_list = 0 1 10\n"
               "ratio.lambda_list = 0 1 20\n");
    RunResult r = run_tool("pseudospectrum --config cli_work/pseudo.cfg --out cli_work/pseudo");
    CHECK(r.code == 0);

    CHECK(csv_header("cli_work/pseudo/pseudospectrum.csv") == "re,im,log10_norm");
    auto rows = csv_rows("cli_work/pseudo/pseudospectrum.csv");
    REQUIRE(rows.size() == 4);
    // far into the left half-plane the norm is pinched between 1/dist(z, spectrum)
    // and the numerical-range bound 1/|Re z|
    CHECK(rows[0][0] == -1000.0);
    CHECK(rows[0][1] == 0.0);
    CHECK(std::abs(rows[0][2] + 3.0) <= 0.01);

    auto ratio = csv_rows("cli_work/pseudo/subelliptic.csv");
    REQUIRE(ratio.size() == 9);
    double lo = 1e300, hi = 0.0;
    for (const auto& row : ratio) {
        REQUIRE(std::isfinite(row[2]));
        REQUIRE(row[2] > 0.0);
        lo = std::min(lo, row[2]);
        hi = std::max(hi, row[2]);
    }
    CHECK(hi <= 10.0 * lo);
}

TEST_CASE("threshold command writes reports and profiles") {
    // no potential: the equation is solved by the flat state exactly
    write_file("cli_work/th_free.cfg", "grid.L = 50\ngrid.N_x = 128\ngrid.N_v = 8\n");
    RunResult free_run =
        run_tool("threshold --config cli_work/th_free.cfg --out cli_work/th_free");
    CHECK(free_run.code == 0);
    const std::string report = slurp("cli_work/th_free/report.txt");
    CHECK(report.find("residual = 0\n") != std::string::npos);
    CHECK(report.find("d1.re = 0\n") != std::string::npos);
    CHECK(report.find("d1.im = 0\n") != std::string::npos);
    auto mrows = csv_rows("cli_work/th_free/m.csv");
    REQUIRE(!mrows.empty());
    for (const auto& row : mrows) {
        CHECK(row[1] == 1.0);
        CHECK(row[2] == 0.0);
    }
    for (const auto& row : csv_rows("cli_work/th_free/profiles.csv")) {
        CHECK(row[1] == 0.0);
        CHECK(row[2] == 0.0);
    }
    CHECK(slurp("cli_work/th_free/c1.svg").find("<svg") != std::string::npos);
    CHECK(slurp("cli_work/th_free/c2.svg").find("<svg") != std::string::npos);

    // slow decay refused
    write_file("cli_work/th_rho4.cfg",
               "grid.L = 50\ngrid.N_x = 128\ngrid.N_v = 8\n"
               "potential.c = 1\npotential.rho = 4\n");
    RunResult rho4 = run_tool("threshold --config cli_work/th_rho4.cfg --out cli_work/th4");
    CHECK(rho4.code == 2);
    CHECK(rho4.err.find("rho") != std::string::npos);

    // a real potential at desk scale: the emitted profiles satisfy the
    // discrete derivative identities that define them
    write_file("cli_work/th.cfg",
               "grid.L = 100\ngrid.N_x = 128\ngrid.N_v = 12\n"
               "potential.c = 1\npotential.rho = 5\n");
    RunResult th = run_tool("threshold --config cli_work/th.cfg --out cli_work/th");
    CHECK(th.code == 0);
    auto prof = csv_rows("cli_work/th/profiles.csv");
    REQUIRE(prof.size() == 128);
    const double dx = 100.0 / 128;
    double scale = 0.0;
    for (const auto& row : prof) scale = std::max(scale, std::abs(row[1]));
    for (size_t m = 0; m + 1 < prof.size(); ++m) {
        const double c1l = prof[m][1], c1r = prof[m + 1][1];
        const double c2l = prof[m][2], c2r = prof[m + 1][2];
        const double g0l = prof[m][3], g0r = prof[m + 1][3];
        const double g1l = prof[m][4], g1r = prof[m + 1][4];
        // steps of the sgn prefix sums
        CHECK(std::abs(c2r - c2l + dx / 8 * (g0l + g0r)) <= 1e-12 * (1.0 + scale));
        const double step =
            dx / 4 * (-4.0 * (c2l + c2r) + dx / 2 * (g0l - g0r)) - dx / 8 * (g1l + g1r);
        CHECK(std::abs(c1r - c1l - step) <= 1e-12 * (1.0 + scale));
    }
}

TEST_CASE("decay command fits and annotates") {
    write_file("cli_work/decay.cfg",
               "grid.L = 50\ngrid.N_x = 128\ngrid.N_v = 8\n"
               "times = 1 2 4\ndt = 0.05\n");
    RunResult r = run_tool("decay --config cli_work/decay.cfg --out cli_work/decay");
    CHECK(r.code == 0);
    CHECK(csv_header("cli_work/decay/decay.csv") == "t,weighted_norm");
    auto rows = csv_rows("cli_work/decay/decay.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][1] > rows[1][1]);
    CHECK(rows[1][1] > rows[2][1]);
    auto coeff = csv_rows("cli_work/decay/coefficient.csv");
    REQUIRE(coeff.size() == 3);
    CHECK(slurp("cli_work/decay/decay.svg").find("slope") != std::string::npos);

    // one sample cannot anchor a fit
    write_file("cli_work/decay1.cfg",
               "grid.L = 50\ngrid.N_x = 128\ngrid.N_v = 8\ntimes = 2\n");
    RunResult one = run_tool("decay --config cli_work/decay1.cfg --out cli_work/decay1");
    CHECK(one.code == 2);
    CHECK(one.err.find("two times") != std::string::npos);

    // weight guard from the library propagates
    write_file("cli_work/decay_s.cfg",
               "grid.L = 50\ngrid.N_x = 128\ngrid.N_v = 8\ntimes = 1 2\ndecay.s = 2\n");
    CHECK(run_tool("decay --config cli_work/decay_s.cfg --out cli_work/decay_s").code == 2);
}

TEST_CASE("contour command compares quadrature with stepping") {
    write_file("cli_work/contour.cfg",
               "grid.L = 50\ngrid.N_x = 128\ngrid.N_v = 8\n"
               "t = 2\ndt = 0.05\ncontour.delta = 1e-10\ncontour.increment = 6\n");
    RunResult r = run_tool("contour --config cli_work/contour.cfg --out cli_work/contour");
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    CHECK(csv_header("cli_work/contour/nodes.csv")
          == "node.re,node.im,weight.re,weight.im,integrand.re,integrand.im");
    auto nodes = csv_rows("cli_work/contour/nodes.csv");
    CHECK(nodes.size() >= 100);
    auto cmp = csv_rows("cli_work/contour/comparison.csv");
    REQUIRE(cmp.size() == 1);
    CHECK(cmp[0][0] == 2.0);
    CHECK(cmp[0][5] <= 1e-3);

    // short horizons are allowed but warned about
    write_file("cli_work/contour_short.cfg",
               "grid.L = 50\ngrid.N_x = 128\ngrid.N_v = 8\n"
               "t = 0.5\ndt = 0.05\ncontour.delta = 1e-8\ncontour.increment = 30\n");
    RunResult warn =
        run_tool("contour --config cli_work/contour_short.cfg --out cli_work/contour_s");
    CHECK(warn.code == 0);
    CHECK(warn.err.find("warning") != std::string::npos);
}

TEST_CASE("numerical failures exit with code 1") {
    // a barrier this tall cannot be sampled by 16 points on a 50-box: the
    // filtered ground profile dips nonpositive and the operator refuses it
    write_file("cli_work/unresolved.cfg",
               "grid.L = 50\ngrid.N_x = 16\ngrid.N_v = 8\n"
               "potential.c = 700\npotential.rho = 5\n");
    RunResult r = run_tool("threshold --config cli_work/unresolved.cfg --out cli_work/unres");
    CHECK(r.code == 1);
    CHECK(r.err.find("resolve") != std::string::npos);
}
