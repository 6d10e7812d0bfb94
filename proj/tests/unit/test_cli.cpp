#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "loopnest/cli.hpp"

using namespace loopnest;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch() {
  const auto dir = std::filesystem::temp_directory_path() / "loopnest_cli_unit";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("perms table") {
  const auto r = cli({"perms"});
  CHECK(r.code == 0);
  CHECK(lines(r.out) == 721);
  CHECK(r.out.rfind("lex,revlex,hamiltonian,order\n0,719,0,o-i-y-x-ky-kx\n", 0) == 0);
  CHECK(lines(cli({"perms", "--n", "3"}).out) == 7);
  CHECK(cli({"perms", "--n", "9"}).code == 2);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({"--bogus"}).code == 2);
  CHECK(cli({"simulate", "--layer", "1,2,3"}).code == 2);
  CHECK(cli({"simulate", "--layer", "2,2,3,3,2,2", "--perm", "o-o-y-x-ky-kx"}).code == 2);
  CHECK(cli({"sweep", "--preset", "nope", "--out", "x.csv"}).code == 2);
}

TEST_CASE("validate subcommand") {
  const auto r = cli({"validate", "--max-extent", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("720/720 permutations match oracle") != std::string::npos);
}

TEST_CASE("simulate prints one row and json on request") {
  const auto r = cli({"simulate", "--layer", "4,3,6,6,3,3", "--perm-lex", "17", "--threads", "2"});
  CHECK(r.code == 0);
  CHECK(lines(r.out) == 2);
  const auto j = cli({"--format", "json", "simulate", "--layer", "4,3,6,6,3,3", "--perm-lex", "17"});
  CHECK(j.code == 0);
  CHECK(j.out.front() == '[');
}

TEST_CASE("trace dump formats agree in length") {
  const auto dir = scratch();
  const auto bin = (dir / "t.bin").string();
  const auto csv = cli({"trace", "--layer", "2,2,3,3,2,2", "--perm-lex", "5"});
  CHECK(csv.code == 0);
  CHECK(cli({"trace", "--layer", "2,2,3,3,2,2", "--perm-lex", "5", "--dump", "bin", "--out", bin}).code == 0);
  CHECK(std::filesystem::file_size(bin) == 16 * (lines(csv.out) - 1));
}

TEST_CASE("emit-c writes every order") {
  const auto dir = scratch();
  CHECK(cli({"emit-c", "--layer", "2,2,3,3,2,2", "--all", "--name", "tiny", "--out-dir", dir.string()}).code == 0);
  CHECK(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator()) == 720);
  CHECK(std::filesystem::exists(dir / "tiny_719.c"));
}

TEST_CASE("sweep then analyze") {
  const auto dir = scratch();
  const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  const std::vector<std::string> base = {"sweep", "--layer", "4,3,6,6,3,3", "--layer", "3,4,5,5,1,1",
                                         "--perms", "sample:24", "--limit", "none"};
  auto args = base;
  args.insert(args.end(), {"--out", a});
  CHECK(cli(args).code == 0);
  args = base;
  args.insert(args.end(), {"--out", b});
  args.insert(args.begin(), {"--workers", "3"});
  CHECK(cli(args).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(lines(slurp(a)) == 1 + 2 * 24);

  const auto rank = cli({"analyze", "rank", "--results", a});
  CHECK(rank.code == 0);
  CHECK(lines(rank.out) == 25);
  CHECK(cli({"analyze", "pairs", "--results", a, "--k", "2", "--top", "5"}).code == 0);
  const auto ss = cli({"analyze", "sample-size", "--good-fraction", "0.1111111111", "--confidence", "0.683"});
  CHECK(ss.code == 0);
  CHECK(ss.out.find("10") != std::string::npos);
  CHECK(cli({"analyze", "signatures", "--results", a}).code == 0);
  CHECK(cli({"analyze", "curves", "--results", a}).code == 0);
  CHECK(cli({"analyze", "reuse", "--layer", "2,2,4,4,3,3", "--perm-lex", "0", "--stride", "4"}).code == 0);
  CHECK(cli({"analyze", "ipc", "--layer", "2,2,4,4,3,3", "--perm-lex", "0", "--window", "50"}).code == 0);
}

}  // TEST_SUITE
