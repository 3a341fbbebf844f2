#include "sbmh/cli/config.hpp"

#include "sbmh/data/generators.hpp"
#include "sbmh/error.hpp"

#include <charconv>
#include <cstdlib>

namespace sbmh::cli {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& e : v) s += (s.empty() ? "" : ", ") + e;
  return s;
}

}  // namespace

double DatasetSpec::resolved_noise() const {
  if (noise) return *noise;
  if (name == "swissroll") return 0.5;
  return 0.1;
}

Json DatasetSpec::to_json() const {
  Json j = {{"name", name}, {"n", n}};
  if (name == "moons" || name == "scurve" || name == "swissroll") j["noise"] = resolved_noise();
  if (name == "pinwheel") {
    j["classes"] = classes;
    j["radial_std"] = radial_std;
    j["tangential_std"] = tangential_std;
    j["rate"] = rate;
  }
  if (name == "mixture") j["pi"] = pi;
  if (name == "gev") j.update({{"xi", xi}, {"mu", mu}, {"sigma", sigma}});
  return j;
}

std::vector<std::string> dataset_names() {
  return {"moons", "pinwheel", "scurve", "swissroll", "mixture", "gev"};
}

data::PointCloud make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.n < 1) throw ArgumentError("dataset size must be >= 1");
  const double noise = spec.resolved_noise();
  if (spec.name == "moons") return data::make_moons(spec.n, noise, seed);
  if (spec.name == "pinwheel") {
    return data::make_pinwheel(spec.n, spec.classes, spec.radial_std, spec.tangential_std, spec.rate,
                               seed);
  }
  if (spec.name == "scurve") return data::make_s_curve(spec.n, noise, seed);
  if (spec.name == "swissroll") return data::make_swiss_roll(spec.n, noise, seed);
  if (spec.name == "mixture" || spec.name == "gev") return make_target(spec).sample(spec.n, seed);
  throw ArgumentError("unknown dataset '" + spec.name + "' (expected " + join(dataset_names()) + ")");
}

data::AnalyticTarget make_target(const DatasetSpec& spec) {
  if (spec.name == "mixture") return data::AnalyticTarget::two_mode_mixture(spec.pi);
  if (spec.name == "gev") return data::AnalyticTarget::gev(spec.xi, spec.mu, spec.sigma);
  throw ArgumentError("dataset '" + spec.name + "' has no analytic density (use mixture or gev)");
}

std::vector<std::string> preset_names() { return {"moons", "pinwheel", "scurve", "swissroll"}; }

Preset preset(const std::string& name) {
  Preset p;
  p.name = name;
  p.score.lr = 5e-4;
  p.score.epochs = 2000;
  p.score.hidden = 512;
  // Denoising fits gave far better samplers than sliced on moons and pinwheel.
  p.score.method = scorematch::Method::denoising;
  p.acceptance.lr = 5e-4;
  p.acceptance.hidden = 256;
  p.acceptance.blocks = 4;
  p.acceptance.epochs = 200;
  p.acceptance.lambda = 2.0;
  if (name == "moons") {
    p.score.lr = 1e-3;
    p.score.epochs = 5000;
    p.score.hidden = 64;
    p.score.batch_size = 512;  // small net, so a wider batch is cheap
    p.acceptance.blocks = 3;
    p.acceptance.epochs = 1000;
    p.rw_sigma = 0.1;
    p.mala_eps = 0.25;
    p.pcn_beta = 0.1;
    p.ula_eps = 0.25;
  } else if (name == "pinwheel") {
    p.rw_sigma = 0.1;
    p.mala_eps = 0.1;
    p.pcn_beta = 0.1;
    p.ula_eps = 0.1;
  } else if (name == "scurve") {
    p.acceptance.hidden = 512;
    p.rw_sigma = 0.2;
    p.mala_eps = 0.2;
    p.pcn_beta = 0.1;
    p.ula_eps = 0.2;
  } else if (name == "swissroll") {
    p.acceptance.hidden = 512;
    p.acceptance.lambda = 1.0;
    p.rw_sigma = 1.0;
    p.mala_eps = 1.0;
    p.pcn_beta = 0.05;
    p.ula_eps = 1.0;
  } else {
    throw ArgumentError("unknown preset '" + name + "' (expected " + join(preset_names()) + ")");
  }
  return p;
}

double preset_step(const Preset& p, proposal::Kind kind) {
  switch (kind) {
    case proposal::Kind::rw: return p.rw_sigma;
    case proposal::Kind::mala: return p.mala_eps;
    case proposal::Kind::pcn: return p.pcn_beta;
  }
  return p.rw_sigma;
}

Json to_json(const scorematch::SMConfig& c) {
  return {{"method", scorematch::to_string(c.method)},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"sigma", c.sigma},
          {"projections", c.projections},
          {"hidden", c.hidden},
          {"hidden_layers", c.hidden_layers},
          {"clip", c.clip},
          {"holdout", c.holdout},
          {"seed", c.seed}};
}

Json to_json(const accept::SBMConfig& c) {
  Json j = {{"lambda", c.lambda},
            {"epochs", c.epochs},
            {"lr", c.lr},
            {"batch_size", c.batch_size},
            {"alpha_start", c.alpha_start},
            {"alpha_end", c.alpha_end},
            {"clip", c.clip},
            {"grad_clip", c.grad_clip},
            {"hidden", c.hidden},
            {"blocks", c.blocks},
            {"pairing", accept::to_string(c.pairing)},
            {"seed", c.seed}};
  if (!c.alpha.empty()) j["alpha"] = c.alpha;
  return j;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> explicit_seed) {
  if (explicit_seed) return *explicit_seed;
  const char* env = std::getenv("SBMH_SEED");
  if (env == nullptr || *env == '\0') return 0;
  const std::string s(env);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ArgumentError("SBMH_SEED must be a non-negative integer, got '" + s + "'");
  }
  return v;
}

}  // namespace sbmh::cli
