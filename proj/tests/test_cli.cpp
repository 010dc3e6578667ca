#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "duality/cli.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = duality::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class Workspace {
 public:
  Workspace() {
    dir_ = fs::temp_directory_path() / ("duality_kit_test_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

const char* kSrw = "1,0,0,0\n0.5,0,0.5,0\n0,0.5,0,0.5\n0,0,0,1\n";
const char* kDiag = "0,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,0\n";
const char* kIdentity4 = "1,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n";

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
}

std::vector<std::pair<std::string, std::string>> parse_csv(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    rows.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  return rows;
}

}  // namespace

TEST_CASE("check-duality exit codes") {
  Workspace ws;
  const auto p = ws.write("p.csv", kSrw), h = ws.write("h.csv", kDiag), id = ws.write("i.csv", kIdentity4);
  auto r = run({"check-duality", "--p", p, "--q", p, "--h", h});
  CHECK(r.code == 0);
  const auto j = Json::parse(r.out);
  CHECK(j["result"]["residual"].get<double>() == 0.0);
  CHECK(j["pass"].get<bool>());
  CHECK(j["seed"].is_null());
  CHECK(j["tool"] == "duality_kit");

  CHECK(run({"check-duality", "--p", p, "--q", id, "--h", h}).code == 1);
  // Input files are left untouched.
  CHECK(slurp(p) == kSrw);
  CHECK(slurp(h) == kDiag);

  const auto bad = ws.write("bad.csv", "1,0\nx,1\n");
  r = run({"check-duality", "--p", bad, "--q", bad, "--h", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.csv:2:1") != std::string::npos);
  CHECK(run({"check-duality", "--p", ws.path("missing.csv"), "--q", p, "--h", h}).code == 2);
  const auto small = ws.write("s.csv", "1,0\n0,1\n");
  CHECK(run({"check-duality", "--p", small, "--q", p, "--h", h}).code == 2);
  CHECK(run({"no-such-command"}).code == 2);
  CHECK(run({}).code == 2);
}

TEST_CASE("matrix subcommands") {
  Workspace ws;
  const auto p = ws.write("p.csv", kSrw), h = ws.write("h.csv", kDiag), id = ws.write("i.csv", kIdentity4);
  const auto mix = ws.write("mix.csv", "0.25,0.75\n0.75,0.25\n"), id2 = ws.write("i2.csv", "1,0\n0,1\n");
  CHECK(run({"solve-dual", "--p", mix, "--h", id2}).code == 0);
  // The transpose of the absorbed walk is not stochastic.
  CHECK(run({"solve-dual", "--p", p, "--h", id}).code == 1);
  CHECK(run({"siegmund", "--p", p}).code == 0);
  const auto r = run({"siegmund", "--p", ws.write("nm.csv", "0.1,0.9\n0.9,0.1\n")});
  CHECK(r.code == 1);
  CHECK(r.out.find("witness") != std::string::npos);

  const auto ex = ws.write("ex.csv", "2,0,1,0\n0,2,1,2\n");
  const auto flip = ws.write("l.csv", "-1,1\n1,-1\n");
  const auto c = run({"cone-dual", "--l", flip, "--h", ex});
  CHECK(c.code == 0);
  const auto cj = Json::parse(c.out);
  CHECK(cj["result"]["extremal_indices"] == Json::array({0, 1}));
  CHECK(run({"cone-dual", "--l", flip, "--h", ws.write("sq.csv", "0,1,0,1\n0,0,1,1\n")}).code == 1);

  CHECK(run({"spectrum", "--p", p, "--q", p}).code == 0);
  CHECK(run({"spectrum", "--p", p, "--q", id}).code == 1);
  const auto killed = ws.write("k.csv", "0,0.5\n0.5,0\n");
  CHECK(run({"measure-duality", "--p", killed, "--q", killed, "--mu", ws.write("mu.csv", "1,1\n")}).code == 0);
  // On the full space the boundary pairs break the measure relation.
  CHECK(run({"measure-duality", "--p", p, "--q", p, "--h", h}).code == 1);
  CHECK(run({"sep-check", "--sites", "3"}).code == 0);
}

TEST_CASE("mechanism and simulation subcommands") {
  const auto list = run({"--format", "csv", "mechanisms", "--list"});
  CHECK(list.code == 0);
  CHECK(list.out ==
        "mechanism,00,01,10,11\nR,00,00,11,11\nC,00,01,01,01\nA,00,01,01,00\nD,00,00,01,01\nBC,00,01,11,11\nBA,00,01,11,10\n");
  CHECK(run({"mechanisms", "--check", "R/C", "--q", "0"}).code == 0);
  CHECK(run({"mechanisms", "--check", "R/D", "--q", "0"}).code == 1);
  CHECK(run({"mechanisms", "--check", "R/A", "--q", "1"}).code == 2);
  CHECK(run({"mechanisms", "--check", "R/A", "--q", "one"}).code == 2);

  CHECK(run({"--seed", "1", "simulate-ips", "-N", "4", "-T", "1", "--rate", "0.5", "--mechanism", "R/C", "--x", "1100"}).code ==
        0);
  CHECK(run({"--seed", "1", "verify-pathwise", "-N", "4", "-T", "1", "--rate", "0.5", "--mechanism", "R/C", "--q", "0",
             "--all-pairs"})
            .code == 0);
  CHECK(run({"--seed", "1", "verify-pathwise", "-N", "4", "-T", "1", "--rate", "0.5", "--mechanism", "R/D", "--q", "0",
             "--all-pairs"})
            .code == 2);
  // Stochastic commands need a seed.
  CHECK(run({"moment-duality", "--replicas", "100"}).code == 2);
  CHECK(run({"--seed", "1", "--replicas", "2000", "moment-duality"}).code == 0);
  const auto rs = run({"--seed", "1", "--replicas", "200", "--format", "csv", "rescale-experiment", "--n-list", "20", "40",
                       "--t", "0.1"});
  CHECK(rs.code <= 1);
  CHECK(rs.out.rfind("N,lhs,rhs,gap,se,limit_lhs,limit_rhs\n", 0) == 0);
  CHECK(run({"--seed", "1", "--replicas", "200", "rescale-experiment", "--q", "0"}).code == 2);
}

TEST_CASE("reports are deterministic and consistent across formats") {
  Workspace ws;
  const std::vector<std::string> base = {"--seed", "7", "--replicas", "3000", "--tol-duality", "1e-7"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  const auto j1 = ws.path("a.json"), c1 = ws.path("a.csv");
  CHECK(run(with({"--out", j1, "moment-duality"})).code == 0);
  const std::string first = slurp(j1);
  CHECK(run(with({"--out", j1, "moment-duality"})).code == 0);
  CHECK(slurp(j1) == first);
  CHECK(run(with({"--out", c1, "--format", "csv", "moment-duality"})).code == 0);

  const auto j = Json::parse(slurp(j1));
  CHECK(j["seed"].get<std::uint64_t>() == 7);
  CHECK(j["tolerances"]["duality"].get<double>() == 1e-7);
  std::vector<std::pair<std::string, std::string>> flat;
  flatten(j, "", flat);
  auto csv = parse_csv(slurp(c1));
  // Same keys in the same order; numbers agree exactly. The echoes of --out
  // and --format are the only intended differences.
  REQUIRE(flat.size() == csv.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    CHECK(flat[i].first == csv[i].first);
    if (flat[i].first == "config.format" || flat[i].first == "config.out") continue;
    char* end = nullptr;
    const double a = std::strtod(flat[i].second.c_str(), &end);
    if (*end == '\0' && !flat[i].second.empty()) {
      CHECK(std::strtod(csv[i].second.c_str(), nullptr) == a);
    } else {
      CHECK(flat[i].second == csv[i].second);
    }
  }

  CHECK(run(with({"--out", ws.path("no/such/dir/r.json"), "moment-duality"})).code == 2);
}

TEST_CASE("JSON config files") {
  Workspace ws;
  const auto p = ws.write("p.csv", kSrw), h = ws.write("h.csv", kDiag);
  const auto cfg = ws.write("c.json", Json{{"p", p}, {"q", p}, {"h", h}, {"tol_duality", 1e-6}}.dump());
  const auto r = run({"--config", cfg, "check-duality"});
  CHECK(r.code == 0);
  CHECK(Json::parse(r.out)["tolerances"]["duality"].get<double>() == 1e-6);
  // Command-line values win over the file.
  CHECK(Json::parse(run({"--config", cfg, "--tol-duality", "1e-5", "check-duality"}).out)["tolerances"]["duality"].get<double>() ==
        1e-5);

  CHECK(run({"--config", ws.write("u.json", R"({"p": "x", "bogus": 1})"), "check-duality"}).code == 2);
  CHECK(run({"--config", ws.write("m.json", R"({"command": "siegmund"})"), "check-duality", "--p", p, "--q", p, "--h", h})
            .code == 2);
  CHECK(run({"--config", ws.write("bad.json", "{"), "check-duality"}).code == 2);

  const auto ips = ws.write("ips.json", Json{{"command", "verify-pathwise"},
                                             {"N", 4},
                                             {"T", 1.0},
                                             {"rates", Json::array({0.5})},
                                             {"mechanisms", Json::array({Json{{"label", 0}, {"forward", "R"}, {"backward", "A"}}})},
                                             {"q", "-1"},
                                             {"all_pairs", true}}
                                            .dump());
  CHECK(run({"--seed", "3", "--config", ips, "verify-pathwise"}).code == 0);
}

TEST_CASE("installed binary") {
  Workspace ws;
  const auto p = ws.write("p.csv", kSrw), h = ws.write("h.csv", kDiag), id = ws.write("i.csv", kIdentity4);
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  const std::string exe = DUALITY_KIT_EXE;
  CHECK(status(exe + " check-duality --p " + p + " --q " + p + " --h " + h) == 0);
  CHECK(status(exe + " check-duality --p " + p + " --q " + id + " --h " + h) == 1);
  CHECK(status(exe + " check-duality --p " + p) == 2);
  CHECK(status(exe + " --version") == 0);
}
