#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <unistd.h>

#include "cli.hpp"

namespace fs = std::filesystem;
using cfo::cli::run_cli;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

double value_after(const std::string& text, const std::string& key) {
    const auto pos = text.find(key);
    REQUIRE(pos != std::string::npos);
    return std::stod(text.substr(pos + key.size()));
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("cfo_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("criterion") {
    const auto a = cli({"criterion", "--pe", "0.1", "--delta-fmax-hz", "300", "--delta-t-us", "71.429", "--solve-min-snr"});
    CHECK(a.code == 0);
    CHECK(std::abs(value_after(a.out, "min_snr_db ") - 21.8) < 0.1);
    const auto b = cli({"criterion", "--pe", "0.1", "--delta-fmax-hz", "300", "--delta-t-us", "285.716", "--solve-min-snr"});
    CHECK(b.code == 0);
    CHECK(std::abs(value_after(b.out, "min_snr_db ") - 9.9) < 0.1);

    CHECK(cli({"criterion", "--pe", "1.5", "--delta-fmax-hz", "300", "--delta-t-us", "71.429", "--solve-min-snr"}).code == 2);
    CHECK(cli({"criterion", "--pe", "0.1", "--delta-fmax-hz", "-3", "--delta-t-us", "71.429"}).code == 2);
    CHECK(cli({"criterion", "--pe", "0.1", "--delta-fmax-hz", "300"}).code == 2);

    const auto t = cli({"criterion", "--pe", "0.1", "--delta-fmax-hz", "300", "--delta-t-us", "71.429",
                        "--snr-db-grid", "20:24:1"});
    CHECK(t.code == 0);
    const auto rows = lines(t.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[2].find("no") != std::string::npos);   // 21 dB
    CHECK(rows[3].find("yes") != std::string::npos);  // 22 dB
}

TEST_CASE("histogram") {
    TempDir dir;
    const std::vector<std::string> args = {"histogram", "--estimator", "preamble", "--effective-snr-db", "14.2635",
                                           "--cfo-hz", "100", "--trials", "20000", "--seed", "5",
                                           "--out", dir / "h.csv"};
    const auto r = cli(args);
    REQUIRE(r.code == 0);
    const auto rows = lines(slurp(dir / "h.csv"));
    REQUIRE(rows.size() > 2);
    CHECK(rows[0] == "bin_lo_hz,bin_hi_hz,count,model_density");
    long total = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::istringstream in(rows[i]);
        std::string lo, hi, count;
        std::getline(in, lo, ',');
        std::getline(in, hi, ',');
        std::getline(in, count, ',');
        total += std::stol(count);
    }
    CHECK(total == 20000);

    const auto manifest = nlohmann::json::parse(slurp(dir / "h.csv.manifest.json"));
    CHECK(manifest["subcommand"] == "histogram");
    CHECK(manifest["seed"] == 5);
    CHECK(manifest["argv"].size() == args.size());
    CHECK(manifest["csv_schema"]["columns"].size() == 4);
    CHECK(manifest["outputs"][0]["fnv1a64"] == cfo::cli::file_digest(dir / "h.csv"));

    const std::string first = slurp(dir / "h.csv");
    REQUIRE(cli(args).code == 0);
    CHECK(slurp(dir / "h.csv") == first);

    const auto missing = cli({"histogram", "--estimator", "cp", "--snr-db", "10"});
    CHECK(missing.code == 2);
    CHECK((missing.out + missing.err).find("Usage") != std::string::npos);
    CHECK(cli({"histogram", "--estimator", "fancy", "--snr-db", "10", "--out", dir / "x.csv"}).code == 2);
    CHECK(cli({"histogram", "--estimator", "cp", "--out", dir / "x.csv"}).code == 2);
    CHECK(cli({"histogram", "--estimator", "cp", "--snr-db", "10", "--trials", "50", "--out", dir / "x.csv"}).code == 1);
}

TEST_CASE("sweep") {
    TempDir dir;
    const auto r = cli({"sweep", "--mode", "two_step", "--cfo-hz", "700", "--snr-db-grid", "0:20:2", "--trials", "20",
                        "--seed", "3", "--out", dir / "s.csv"});
    REQUIRE(r.code == 0);
    const auto rows = lines(slurp(dir / "s.csv"));
    REQUIRE(rows.size() == 12);
    CHECK(rows[0] == "snr_db,cfo_hz,mode,mean_err_hz,std_err_hz,model_std_hz,p_exceed_300,decode_rate,ci_lo,ci_hi,trials");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::istringstream in(rows[i]);
        std::vector<std::string> cols;
        for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
        REQUIRE(cols.size() == 11);
        const double rate = std::stod(cols[7]);
        CHECK(rate >= 0.0);
        CHECK(rate <= 1.0);
    }

    REQUIRE(cli({"sweep", "--mode", "coarse_only", "--cfo-hz", "700", "--snr-db-grid", "0:20:2", "--trials", "20",
                 "--seed", "3", "--out", dir / "c.csv"})
                .code == 0);
    const auto other = lines(slurp(dir / "c.csv"));
    CHECK(other.size() == rows.size());
    CHECK(other[0] == rows[0]);

    CHECK(cli({"sweep", "--snr-db-grid=-2:0:1", "--trials", "5", "--out", dir / "n.csv"}).code == 0);
    CHECK(cli({"sweep", "--snr-db-grid", "0:20", "--out", dir / "b.csv"}).code == 2);
    CHECK(cli({"sweep", "--snr-db-grid", "5:0:1", "--out", dir / "b.csv"}).code == 2);
    CHECK(cli({"sweep", "--mode", "both", "--snr-db-grid", "0:1:1", "--out", dir / "b.csv"}).code == 2);
    CHECK(cli({"sweep", "--snr-db-grid", "0:1:1", "--repetition", "4", "--out", dir / "b.csv"}).code == 2);
    CHECK(cli({"sweep", "--snr-db-grid", "0:1:1", "--trials", "2", "--out", (dir.path / "no" / "b.csv").string()}).code == 1);
}

TEST_CASE("replay") {
    TempDir dir;
    REQUIRE(cli({"sweep", "--cfo-hz", "3000", "--snr-db-grid", "0:4:2", "--trials", "30", "--seed", "8", "--out",
                 dir / "s.csv"})
                .code == 0);
    const auto again = cli({"replay", "--manifest", dir / "s.csv.manifest.json", "--out", dir / "r.csv"});
    CHECK(again.code == 0);
    CHECK(slurp(dir / "r.csv") == slurp(dir / "s.csv"));

    auto m = nlohmann::json::parse(slurp(dir / "s.csv.manifest.json"));
    m["outputs"][0]["fnv1a64"] = "0000000000000000";
    std::ofstream(dir / "bad.json") << m.dump();
    CHECK(cli({"replay", "--manifest", dir / "bad.json", "--out", dir / "r2.csv"}).code == 1);
    CHECK(cli({"replay", "--manifest", dir / "missing.json"}).code == 1);
}

TEST_CASE("help and usage") {
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"sweep", "--help"}).code == 0);
    CHECK(cli({}).code == 2);
    CHECK(cli({"bogus"}).code == 2);
}

}  // TEST_SUITE
