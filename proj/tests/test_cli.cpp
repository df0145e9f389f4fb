#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = PLCMAC_CLI_PATH;

int run(const std::string& args) {
    std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("solve writes one row per station count") {
    TempDir d("plcmac_cli_solve");
    CHECK(run("solve --preset ca1 --n 1..10 --out " + d.path.string()) == 0);
    std::string csv = slurp(d.path / "equilibrium.csv");
    CHECK(count_lines(csv) == 11);  // header + 10 rows
    CHECK(csv.rfind("N,pe,S,gamma,p_s,p_c,n_0,n_1,n_2,n_3", 0) == 0);
}

TEST_CASE("non-monotone configurations are rejected with exit code 2") {
    TempDir d("plcmac_cli_reject");
    CHECK(run("solve --preset ca3 --n 5 --out " + d.path.string()) == 2);
    CHECK(run("solve --preset counterexample --n 10 --out " +
              d.path.string()) == 2);
    CHECK(run("solve --preset nosuch --n 5 --out " + d.path.string()) == 2);
}

TEST_CASE("scan reports the three counterexample fixed points") {
    TempDir d("plcmac_cli_scan");
    CHECK(run("scan --preset counterexample --n 10 --out " +
              d.path.string()) == 0);
    std::string csv = slurp(d.path / "roots.csv");
    CHECK(count_lines(csv) == 4);  // header + 3 roots
}

TEST_CASE("check exits cleanly on a compliant preset") {
    CHECK(run("check --preset ca1") == 0);
}

TEST_CASE("simulate honors the default-output environment variable") {
    TempDir d("plcmac_cli_env");
    std::string cmd = "PLCMAC_DEFAULT_OUT=" + d.path.string() + " " + kCli +
                      " simulate --preset ca1 --n 2 --slots 20000 --seeds 3"
                      " >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(d.path / "summary.csv"));
    CHECK(fs::exists(d.path / "pe_trace.csv"));
    CHECK(fs::exists(d.path / "success_ids.csv"));
}

TEST_CASE("re-running the same manifest reproduces outputs byte for byte") {
    TempDir a("plcmac_cli_det_a");
    TempDir b("plcmac_cli_det_b");
    std::string tail = " --preset ca1 --n 2,3 --slots 50000 --seeds 1,2"
                       " --jobs 2 --out ";
    CHECK(run("compare" + tail + a.path.string()) == 0);
    CHECK(run("compare" + tail + b.path.string()) == 0);
    CHECK(slurp(a.path / "compare.csv") == slurp(b.path / "compare.csv"));
}

TEST_CASE("custom JSON configuration files are accepted") {
    TempDir d("plcmac_cli_cfg");
    fs::path cfg = d.path / "cfg.json";
    {
        std::ofstream os(cfg);
        os << R"({"cw":[8,16,32],"dc":[0,1,3]})";
    }
    CHECK(run("solve --config " + cfg.string() + " --n 4 --out " +
              d.path.string()) == 0);
    std::string csv = slurp(d.path / "equilibrium.csv");
    CHECK(count_lines(csv) == 2);
}
