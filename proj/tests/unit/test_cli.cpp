#include "magspec/output.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace magspec;
using namespace magspec::cli;
using magspec::testing::run_cli;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("magspec_cli_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::vector<std::string> kBranches = {"branches", "--n", "0..1", "--eta", "-1..1:0.5", "--bc", "neumann"};

}  // namespace

TEST_CASE("fnv1a reference vectors") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("range parsing") {
    CHECK(parse_int_range("0..3") == std::vector<int>{0, 1, 2, 3});
    CHECK(parse_int_range("2,5,7") == std::vector<int>{2, 5, 7});
    CHECK(parse_int_range("4") == std::vector<int>{4});
    auto r = parse_real_range("-1..1:0.5");
    REQUIRE(r.size() == 5);
    CHECK(r.front() == -1.0);
    CHECK(r.back() == doctest::Approx(1.0));
    CHECK(parse_real_range("0.2,0.1") == std::vector<double>{0.2, 0.1});
    CHECK_THROWS(parse_int_range("a..b"));
    CHECK_THROWS(parse_real_range("0..1:-1"));
}

TEST_CASE("real formatting round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1e300}) CHECK(std::stod(format_real(v)) == v);
}

TEST_CASE("branches output is deterministic and cache independent") {
    auto a = run_cli(kBranches);
    auto b = run_cli(kBranches);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("# magspec ", 0) == 0);

    auto dir = temp_dir("cache");
    auto with_cache = kBranches;
    with_cache.insert(with_cache.end(), {"--cache", dir.string()});
    auto c1 = run_cli(with_cache);
    auto c2 = run_cli(with_cache);
    CHECK(c1.code == 0);
    CHECK(c1.out == a.out);
    CHECK(c2.out == a.out);
    CHECK(!std::filesystem::is_empty(dir));
    std::filesystem::remove_all(dir);
}

TEST_CASE("the config hash ignores output-only options") {
    auto jobs = kBranches;
    jobs.insert(jobs.end(), {"--jobs", "1"});
    CHECK(run_cli(jobs).out == run_cli(kBranches).out);
    auto other = kBranches;
    other.insert(other.end(), {"--grid-step", "4e-3"});
    auto first = [](const std::string& s) { return s.substr(0, s.find('\n')); };
    CHECK(first(run_cli(other).out) != first(run_cli(kBranches).out));
}

TEST_CASE("error exits") {
    auto unknown = run_cli({"branches", "--bogus"});
    CHECK(unknown.code == 2);
    auto none = run_cli({});
    CHECK(none.code == 2);
    auto bad = run_cli({"branches", "--bc", "robin:x"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("bad Robin coefficient in 'robin:x'") != std::string::npos);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("config file with an explicit override") {
    auto dir = temp_dir("config");
    auto cfg = dir / "run.json";
    {
        std::ofstream f(cfg);
        f << R"({"subcommand": "branches", "n": "0", "eta": [0.0, 0.5], "bc": "dirichlet"})";
    }
    auto from_file = run_cli({"--config", cfg.string()});
    REQUIRE(from_file.code == 0);
    auto explicit_run = run_cli({"branches", "--n", "0", "--eta", "0,0.5", "--bc", "dirichlet"});
    CHECK(from_file.out == explicit_run.out);
    auto override = run_cli({"--config", cfg.string(), "--bc", "neumann"});
    auto neumann = run_cli({"branches", "--n", "0", "--eta", "0,0.5", "--bc", "neumann"});
    CHECK(override.out == neumann.out);
    std::filesystem::remove_all(dir);
}

TEST_CASE("json output and output directory") {
    auto args = kBranches;
    args.insert(args.end(), {"--format", "json"});
    auto run = run_cli(args);
    REQUIRE(run.code == 0);
    auto doc = nlohmann::json::parse(run.out);
    CHECK(doc.contains("magspec"));
    REQUIRE(doc["records"].is_array());
    CHECK(doc["records"].size() == 10);
    CHECK(doc["records"][0].contains("lambda"));

    auto dir = temp_dir("out");
    auto to_dir = kBranches;
    to_dir.insert(to_dir.end(), {"--out", dir.string()});
    REQUIRE(run_cli(to_dir).code == 0);
    CHECK(slurp(dir / "branches.csv") == run_cli(kBranches).out);
    std::filesystem::remove_all(dir);
}

TEST_CASE("validate passes") {
    auto run = run_cli({"validate"});
    INFO(run.out);
    CHECK(run.code == 0);
}
