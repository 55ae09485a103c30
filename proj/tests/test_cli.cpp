// Drives the heatlift binary end to end: exit codes, report files, byte
// reproducibility. argv[1] = binary, argv[2] = configs directory.

#include <cassert>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string g_binary, g_configs;
int g_failures = 0;

void expect(bool ok, const std::string& what) {
    if (ok) {
        std::cout << "ok: " << what << "\n";
    } else {
        std::cout << "FAILED: " << what << "\n";
        ++g_failures;
    }
}

int run(const std::string& config, const std::string& out, const std::string& extra = "") {
    const std::string cmd = g_binary + " --config " + g_configs + "/" + config + " --out " + out +
                            " " + extra + " > " + out + ".stdout 2> " + out + ".stderr";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream is(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: test_cli <binary> <configs-dir>\n";
        return 2;
    }
    g_binary = argv[1];
    g_configs = argv[2];
    const fs::path base = fs::temp_directory_path() / "heatlift_cli_test";
    fs::remove_all(base);
    fs::create_directories(base);

    // Trivial lemma31: zero rate passes with both sides exactly zero.
    {
        const std::string out = (base / "lemma_trivial").string();
        expect(run("lemma31_trivial.json", out) == 0, "lemma31 trivial exits 0");
        auto rows = read_csv(out + "/lemma31.csv");
        expect(rows.size() == 2 && rows[1].back() == "true", "lemma31 trivial row passes");
        expect(rows[1][4] == "0" && rows[1][6] == "0", "lemma31 trivial sides are zero");
    }

    // Convergence study: three rows, strictly decreasing error column.
    {
        const std::string out = (base / "lift").string();
        expect(run("lift_limit.json", out) == 0, "lift_limit exits 0");
        auto rows = read_csv(out + "/convergence.csv");
        expect(rows.size() == 4, "convergence.csv has header + 3 rows");
        bool monotone = true;
        for (std::size_t i = 2; i < rows.size(); ++i)
            monotone = monotone && std::stod(rows[i][1]) < std::stod(rows[i - 1][1]);
        expect(monotone, "error column strictly decreasing");
        const std::string manifest = slurp(out + "/manifest.json");
        expect(manifest.find("\"all_pass\": true") != std::string::npos,
               "lift_limit manifest all_pass");
        expect(manifest.find("lift observed order") != std::string::npos,
               "manifest records the observed order check");
    }

    // Estimates: sup rows carry bound 1 at T = 1 and pass.
    {
        const std::string out = (base / "estimates").string();
        expect(run("estimates_1d.json", out) == 0, "estimates exits 0");
        auto rows = read_csv(out + "/estimates.csv");
        int sup_rows = 0;
        bool all_pass = true;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i][0] == "sup_2_3") {
                ++sup_rows;
                all_pass = all_pass && rows[i][3] == "1" && rows[i][7] == "true";
            }
        }
        expect(sup_rows > 0 && all_pass, "every sup_2_3 row has asserted_bound 1 and passes");
    }

    // Reproducibility: identical config produces byte-identical CSV bodies.
    {
        const std::string out1 = (base / "repro1").string();
        const std::string out2 = (base / "repro2").string();
        expect(run("lemma31_small.json", out1) == 0, "lemma31 small run 1 exits 0");
        expect(run("lemma31_small.json", out2) == 0, "lemma31 small run 2 exits 0");
        expect(slurp(out1 + "/lemma31.csv") == slurp(out2 + "/lemma31.csv"),
               "identical config gives byte-identical lemma31.csv");
        const std::string out3 = (base / "repro3").string();
        expect(run("lemma31_small.json", out3, "--seed 99") == 0, "seed override exits 0");
        expect(slurp(out1 + "/lemma31.csv") != slurp(out3 + "/lemma31.csv"),
               "seed override changes the Monte Carlo body");
    }

    // Experiment override flag.
    {
        const std::string out = (base / "override").string();
        expect(run("lemma31_trivial.json", out, "--experiment solve2d") == 0,
               "--experiment override runs solve2d");
        expect(fs::exists(out + "/estimates.csv"), "override produced estimates.csv");
    }

    // Full suite: runs every experiment family into one output directory.
    {
        const std::string out = (base / "full").string();
        expect(run("full_suite.json", out) == 0, "full_suite exits 0");
        for (const char* file : {"solve1d_estimates.csv", "solve2d_estimates.csv",
                                 "lattice_estimates.csv", "lemma31.csv", "convergence.csv",
                                 "manifest.json"})
            expect(fs::exists(fs::path(out) / file), std::string("full_suite wrote ") + file);
    }

    // Failing assertion: drift guard trips on an under-resolved grid.
    {
        const std::string out = (base / "drift").string();
        expect(run("estimates_drift_fail.json", out) == 1, "drift failure exits 1");
        const std::string err = slurp(out + ".stderr");
        expect(err.find("fail: drift") != std::string::npos, "failure reason on stderr");
    }

    // Configuration errors: named failing field, exit 2.
    {
        const std::string out = (base / "bad").string();
        expect(run("missing_experiment.json", out) == 2, "missing experiment exits 2");
        expect(slurp(out + ".stderr").find("config: experiment") != std::string::npos,
               "missing experiment names the field");
        expect(run("bad_alpha.json", out) == 2, "bad alphas exits 2");
        expect(slurp(out + ".stderr").find("config: alphas") != std::string::npos,
               "bad alphas names the field");
        expect(run("window_too_small.json", out) == 2, "small window exits 2");
        expect(slurp(out + ".stderr").find("grid_window") != std::string::npos,
               "small window names the field");
    }

    if (g_failures == 0) std::cout << "test_cli: all checks passed\n";
    return g_failures == 0 ? 0 : 1;
}
