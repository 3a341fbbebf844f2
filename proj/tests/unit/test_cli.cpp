#include <doctest.h>

#include "sbmh/cli/checkpoint.hpp"
#include "sbmh/cli/commands.hpp"
#include "sbmh/cli/config.hpp"
#include "sbmh/cli/pipelines.hpp"
#include "sbmh/data/point_cloud.hpp"
#include "sbmh/error.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sbmh;
using namespace sbmh::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = run(args, o, e);
  return {code, o.str(), e.str()};
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sbmh_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

std::string s(const fs::path& p) { return p.string(); }

bool one_line(const std::string& err) {
  return !err.empty() && err.find('\n') == err.size() - 1;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) {
    if (value) {
      setenv("SBMH_SEED", value, 1);
    } else {
      unsetenv("SBMH_SEED");
    }
  }
  ~EnvGuard() { unsetenv("SBMH_SEED"); }
};

}  // namespace

TEST_CASE("checkpoint round trip is exact on 100 random inputs") {
  const auto dir = scratch("ckpt");
  Rng rng(11);
  ndiff::ScoreNet sn(3, 17, 2);
  sn.initialize(rng);
  ndiff::AcceptanceNet an(2, 9, 3);
  an.initialize(rng);
  save_checkpoint(dir / "s.json", ScoreCheckpoint{sn, {{"seed", 1}}});
  AcceptanceCheckpoint ac{an, proposal::Kind::pcn, 0.35, "s.json", {{"seed", 2}}};
  save_checkpoint(dir / "a.json", ac);

  const auto s2 = load_score_checkpoint(dir / "s.json");
  const auto a2 = load_acceptance_checkpoint(dir / "a.json");
  std::normal_distribution<double> z(0.0, 3.0);
  Array xs(100, 3), us(100, 4);
  for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = z(rng);
  for (Eigen::Index i = 0; i < us.size(); ++i) us.data()[i] = z(rng);
  CHECK((s2.net.forward(xs) - sn.forward(xs)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a2.net.logit(us) - an.logit(us)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a2.proposal == proposal::Kind::pcn);
  CHECK(a2.proposal_parameter == 0.35);
  CHECK(a2.score_checkpoint == "s.json");
  CHECK(s2.net.hidden() == 17);
  CHECK(a2.net.blocks() == 3);

  // A score checkpoint is not an acceptance checkpoint.
  CHECK_THROWS_AS(load_acceptance_checkpoint(dir / "s.json"), ParseError);
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(load_score_checkpoint(dir / "bad.json"), ParseError);
  CHECK_THROWS_AS(load_score_checkpoint(dir / "missing.json"), IoError);
}

TEST_CASE("config hash is stable and sensitive") {
  const Json a = {{"lr", 1e-3}, {"epochs", 10}};
  const Json b = {{"epochs", 10}, {"lr", 1e-3}};
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(Json{{"lr", 1e-3}, {"epochs", 11}}));
}

TEST_CASE("presets carry the published training settings") {
  const auto moons = preset("moons");
  CHECK(moons.score.lr == 1e-3);
  CHECK(moons.score.epochs == 5000);
  CHECK(moons.score.hidden == 64);
  CHECK(moons.acceptance.lr == 5e-4);
  CHECK(moons.acceptance.hidden == 256);
  CHECK(moons.acceptance.blocks == 3);
  CHECK(moons.acceptance.epochs == 1000);
  CHECK(moons.acceptance.lambda == 2.0);

  const auto roll = preset("swissroll");
  CHECK(roll.score.lr == 5e-4);
  CHECK(roll.score.epochs == 2000);
  CHECK(roll.score.hidden == 512);
  CHECK(roll.acceptance.hidden == 512);
  CHECK(roll.acceptance.blocks == 4);
  CHECK(roll.acceptance.epochs == 200);
  CHECK(roll.acceptance.lambda == 1.0);

  const auto pin = preset("pinwheel");
  CHECK(pin.acceptance.hidden == 256);
  CHECK(pin.acceptance.blocks == 4);
  CHECK(pin.acceptance.epochs == 200);
  CHECK(preset("scurve").acceptance.hidden == 512);
  CHECK_THROWS_AS(preset("mnist"), ArgumentError);
  CHECK(preset_step(moons, proposal::Kind::mala) == moons.mala_eps);
}

TEST_CASE("seed resolution") {
  {
    EnvGuard env(nullptr);
    CHECK(resolve_seed(std::nullopt) == 0);
    CHECK(resolve_seed(7) == 7);
  }
  {
    EnvGuard env("123");
    CHECK(resolve_seed(std::nullopt) == 123);
    CHECK(resolve_seed(5) == 5);
  }
  {
    EnvGuard env("12x");
    CHECK_THROWS_AS(resolve_seed(std::nullopt), ArgumentError);
  }
}

TEST_CASE("gen-data honours SBMH_SEED and reruns byte for byte") {
  const auto dir = scratch("gen");
  {
    EnvGuard env("42");
    REQUIRE(invoke({"gen-data", "--dataset", "pinwheel", "--n", "300", "--out", s(dir / "env.csv")}).code == 0);
  }
  REQUIRE(invoke({"gen-data", "--dataset", "pinwheel", "--n", "300", "--seed", "42", "--out",
               s(dir / "flag.csv")}).code == 0);
  REQUIRE(invoke({"gen-data", "--dataset", "pinwheel", "--n", "300", "--seed", "43", "--out",
               s(dir / "other.csv")}).code == 0);
  CHECK(slurp(dir / "env.csv") == slurp(dir / "flag.csv"));
  CHECK(slurp(dir / "env.csv") != slurp(dir / "other.csv"));
  CHECK(data::read_csv(dir / "flag.csv").size() == 300);

  const auto m = read_json(dir / "flag.manifest.json");
  CHECK(m["seed"] == 42);
  CHECK(m["dataset"]["classes"] == 5);

  EnvGuard bad("nope");
  const auto r = invoke({"gen-data", "--dataset", "moons", "--out", s(dir / "x.csv")});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error[argument]", 0) == 0);
  CHECK(one_line(r.err));
}

TEST_CASE("train-score with zero epochs writes a loadable init checkpoint") {
  const auto dir = scratch("ts0");
  REQUIRE(invoke({"gen-data", "--dataset", "moons", "--n", "200", "--seed", "1", "--out",
               s(dir / "d.csv")}).code == 0);
  const auto r = invoke({"train-score", "--data", s(dir / "d.csv"), "--preset", "moons", "--epochs",
                      "0", "--seed", "3", "--out", s(dir / "s.json")});
  REQUIRE(r.code == 0);
  const auto ck = load_score_checkpoint(dir / "s.json");
  CHECK(ck.net.hidden() == 64);
  CHECK(ck.training["epochs_completed"] == 0);
  CHECK(ck.training["config"]["lr"] == 1e-3);
  // Saving what was loaded reproduces the file.
  save_checkpoint(dir / "again.json", ck);
  CHECK(slurp(dir / "again.json") == slurp(dir / "s.json"));
}

TEST_CASE("train, sample and evaluate end to end") {
  const auto dir = scratch("e2e");
  REQUIRE(invoke({"gen-data", "--dataset", "moons", "--n", "400", "--seed", "1", "--out",
               s(dir / "d.csv")}).code == 0);
  REQUIRE(invoke({"train-score", "--data", s(dir / "d.csv"), "--preset", "moons", "--epochs", "30",
               "--seed", "2", "--out", s(dir / "s.json")}).code == 0);
  CHECK(fs::exists(dir / "s.loss.csv"));
  REQUIRE(invoke({"train-acceptance", "--data", s(dir / "d.csv"), "--score", s(dir / "s.json"),
               "--preset", "moons", "--proposal", "rw", "--step", "0.3", "--epochs", "10",
               "--seed", "3", "--out", s(dir / "a.json")}).code == 0);
  CHECK(fs::exists(dir / "a.trace.csv"));
  const auto ack = load_acceptance_checkpoint(dir / "a.json");
  CHECK(ack.proposal == proposal::Kind::rw);
  CHECK(ack.proposal_parameter == 0.3);
  CHECK(ack.training["config"]["epochs"] == 10);

  const std::vector<std::string> sample = {
      "sample", "--method", "score-rw", "--score", s(dir / "s.json"), "--acceptance",
      s(dir / "a.json"), "--chains", "8", "--steps", "40", "--thin", "2", "--seed", "4",
      "--data", s(dir / "d.csv"), "--out", s(dir / "x.csv")};
  REQUIRE(invoke(sample).code == 0);
  const std::string first = slurp(dir / "x.csv");
  CHECK(data::read_csv(dir / "x.csv").size() == 8 * 16);
  REQUIRE(invoke(sample).code == 0);
  CHECK(slurp(dir / "x.csv") == first);

  // Rerunning the manifest's argv reproduces the bytes.
  const auto m = read_json(dir / "x.manifest.json");
  CHECK(m["chain_seeds"].size() == 8);
  CHECK(m["burn_in"] == 8);
  REQUIRE(invoke(m["argv"].get<std::vector<std::string>>()).code == 0);
  CHECK(slurp(dir / "x.csv") == first);

  // Wrong acceptance for the method, and a step that disagrees with training.
  auto wrong = sample;
  wrong[2] = "score-mala";
  auto r = invoke(wrong);
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error[argument]", 0) == 0);
  auto bad_step = sample;
  bad_step.insert(bad_step.end(), {"--step", "0.5"});
  CHECK(invoke(bad_step).code != 0);

  r = invoke({"evaluate", "--samples", s(dir / "x.csv"), "--reference", s(dir / "d.csv"), "--dataset",
           "moons", "--method", "score-rw", "--out", s(dir / "report.csv")});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind(metrics::report_header(), 0) == 0);
  REQUIRE(invoke({"evaluate", "--samples", s(dir / "x.csv"), "--reference", s(dir / "d.csv"), "--out",
               s(dir / "report.csv")}).code == 0);
  std::ifstream rep(dir / "report.csv");
  int lines = 0;
  for (std::string line; std::getline(rep, line);) ++lines;
  CHECK(lines == 3);
}

TEST_CASE("evaluate: identical clouds give zero, mismatched dims are typed errors") {
  const auto dir = scratch("eval");
  REQUIRE(invoke({"gen-data", "--dataset", "moons", "--n", "150", "--seed", "1", "--out",
               s(dir / "d.csv")}).code == 0);
  REQUIRE(invoke({"gen-data", "--dataset", "scurve", "--n", "150", "--seed", "1", "--out",
               s(dir / "c.csv")}).code == 0);
  auto r = invoke({"evaluate", "--samples", s(dir / "d.csv"), "--reference", s(dir / "d.csv")});
  REQUIRE(r.code == 0);
  std::istringstream rows(r.out);
  std::string header, row;
  std::getline(rows, header);
  std::getline(rows, row);
  std::vector<std::string> f;
  std::stringstream ss(row);
  for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
  REQUIRE(f.size() == 8);
  CHECK(std::stod(f[2]) == 0.0);
  CHECK(std::stod(f[3]) == 0.0);
  CHECK(std::stod(f[4]) <= 1e-12);

  r = invoke({"evaluate", "--samples", s(dir / "d.csv"), "--reference", s(dir / "c.csv")});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error[dimension]", 0) == 0);
  CHECK(one_line(r.err));
}

TEST_CASE("ula with zero steps echoes the initial cloud") {
  const auto dir = scratch("echo");
  REQUIRE(invoke({"gen-data", "--dataset", "moons", "--n", "12", "--seed", "5", "--out",
               s(dir / "init.csv")}).code == 0);
  REQUIRE(invoke({"sample", "--method", "ula", "--target", "gaussian", "--steps", "0", "--init",
               s(dir / "init.csv"), "--out", s(dir / "x.csv")}).code == 0);
  CHECK(data::read_csv(dir / "x.csv").points == data::read_csv(dir / "init.csv").points);
}

TEST_CASE("exact-mh on the mixture target and taylor-mh run from flags") {
  const auto dir = scratch("exact");
  auto r = invoke({"sample", "--method", "exact-mh", "--target", "mixture", "--pi", "0.8", "--chains",
                "4", "--steps", "200", "--seed", "1", "--out", s(dir / "m.csv")});
  REQUIRE(r.code == 0);
  const auto m = read_json(dir / "m.manifest.json");
  CHECK(m["init"] == "modes");
  CHECK(m["transition"]["proposal"] == "rw sigma=6");
  CHECK(data::read_csv(dir / "m.csv").size() == 4 * 160);

  r = invoke({"sample", "--method", "taylor-mh", "--target", "gaussian", "--proposal", "mala",
           "--step", "0.5", "--chains", "3", "--steps", "20", "--out", s(dir / "t.csv")});
  CHECK(r.code == 0);

  r = invoke({"sample", "--method", "exact-mh", "--target", "gev", "--xi", "0.25", "--proposal", "rw",
           "--step", "0.5", "--chains", "2", "--steps", "10", "--init", "gaussian",
           "--out", s(dir / "g.csv")});
  // Gaussian starting points can fall outside the GEV support.
  if (r.code != 0) CHECK(r.err.rfind("error[support]", 0) == 0);
}

TEST_CASE("documented error cases exit non-zero with one typed line") {
  const auto dir = scratch("errors");
  auto r = invoke({"train-acceptance", "--dataset", "moons", "--score", s(dir / "nope.json"), "--out",
                s(dir / "a.json")});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error[io]", 0) == 0);
  CHECK(r.err.find("nope.json") != std::string::npos);
  CHECK(one_line(r.err));

  r = invoke({"reproduce", "fig9"});
  CHECK(r.code != 0);
  for (const auto& id : reproduce_ids()) CHECK(r.err.find(id) != std::string::npos);
  CHECK(one_line(r.err));

  r = invoke({"sample", "--method", "nuts", "--target", "gaussian", "--out", s(dir / "x.csv")});
  CHECK(r.err.rfind("error[argument]", 0) == 0);

  r = invoke({"sample", "--method", "score-mala", "--target", "gaussian", "--out", s(dir / "x.csv")});
  CHECK(r.err.rfind("error[argument]", 0) == 0);

  r = invoke({"gen-data", "--dataset", "moons"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error[usage]", 0) == 0);
  CHECK(one_line(r.err));

  r = invoke({"gen-data", "--dataset", "mnist", "--out", s(dir / "x.csv")});
  CHECK(r.err.rfind("error[argument]", 0) == 0);

  std::ofstream(dir / "broken.csv") << "x0,x1\n1.0,abc\n";
  r = invoke({"evaluate", "--samples", s(dir / "broken.csv"), "--reference", s(dir / "broken.csv")});
  CHECK(r.err.rfind("error[parse]", 0) == 0);

  CHECK(invoke({}).code == 2);
}

TEST_CASE("INI config supplies options and flags win") {
  const auto dir = scratch("ini");
  std::ofstream(dir / "run.ini") << "[gen-data]\ndataset=moons\nn=50\nseed=9\n";
  REQUIRE(invoke({"--config", s(dir / "run.ini"), "gen-data", "--out", s(dir / "a.csv")}).code == 0);
  CHECK(data::read_csv(dir / "a.csv").size() == 50);
  REQUIRE(invoke({"--config", s(dir / "run.ini"), "gen-data", "--n", "70", "--out", s(dir / "b.csv")})
              .code == 0);
  CHECK(data::read_csv(dir / "b.csv").size() == 70);
  CHECK(read_json(dir / "b.manifest.json")["seed"] == 9);
}

TEST_CASE("figA-taylor pipeline writes its curves") {
  const auto dir = scratch("figA");
  REQUIRE(invoke({"reproduce", "figA-taylor", "--out", s(dir), "--seed", "1"}).code == 0);
  CHECK(fs::exists(dir / "figA-taylor" / "taylor_error.csv"));
  CHECK(fs::exists(dir / "figA-taylor" / "taylor_quartic.svg"));
  CHECK(fs::exists(dir / "figA-taylor" / "manifest.json"));

  PipelineOptions opt;
  opt.out_dir = dir;
  opt.svg = false;
  const auto c = reproduce_figA(opt);
  REQUIRE(c.variants[1] == "taylor1_avg");
  for (double e : c.gaussian_error[1]) CHECK(e < 1e-8);
  for (double e : c.gaussian_error[2]) CHECK(e < 1e-8);
  // taylor1 on -x^4 is second order: shrinking the distance 10x cuts the error ~100x.
  const auto& q = c.quartic_error[0];
  const double ratio = q[8] / q[0];  // distances 1e-2 and 1e-3
  CHECK(ratio > 80.0);
  CHECK(ratio < 120.0);
}

TEST_CASE("method names and helpers") {
  for (const auto& n : method_names()) CHECK(to_string(parse_method(n)) == n);
  CHECK_THROWS_AS(parse_method("hmc"), ArgumentError);
  CHECK(method_kernel(Method::score_pcn) == proposal::Kind::pcn);
  CHECK_THROWS_AS(method_kernel(Method::ula), ArgumentError);
  CHECK(scaled_epochs(1000, 0.2) == 200);
  CHECK_THROWS_AS(scaled_epochs(10, -1.0), ArgumentError);
  CHECK(StepSweep::spread({0.1, 0.4, 0.2}) == doctest::Approx(4.0));
  CHECK(StepSweep::spread({0.1, std::numeric_limits<double>::infinity()}) ==
        std::numeric_limits<double>::infinity());
}
