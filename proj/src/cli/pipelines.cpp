#include "sbmh/cli/pipelines.hpp"

#include "sbmh/cli/svg.hpp"
#include "sbmh/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sbmh::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Seed streams under the pipeline seed.
enum Stream : std::uint64_t {
  kData = 0,
  kReference = 1,
  kScore = 2,
  kAcceptance = 3,  // + proposal kind
  kSampler = 10,    // + method
  kMetrics = 20,
};

std::uint64_t stream(const PipelineOptions& opt, std::uint64_t s) { return derive_seed(opt.seed, s); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::ofstream open_csv(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + p.string());
  f.precision(17);
  return f;
}

Json base_manifest(const std::string& id, const PipelineOptions& opt) {
  return {{"command", "reproduce"},
          {"id", id},
          {"argv", opt.argv},
          {"seed", opt.seed},
          {"scale", opt.scale},
          {"jobs", opt.jobs},
          {"seed_streams",
           {{"data", kData}, {"reference", kReference}, {"score", kScore},
            {"acceptance", "3 + proposal kind (rw 0, mala 1, pcn 2)"},
            {"sampler", "10 + method index"}, {"metrics", kMetrics}}},
          {"decisions",
           {{"ula_update", "x + (eps^2/2) s(x) + eps z"},
            {"accept_rule", "u ~ U(0,1], accept iff u <= a"},
            {"epoch", "one minibatch update"},
            {"mala_jacobian", "stop-gradient"},
            {"w2", "distance"},
            {"mmd", "unbiased MMD^2 clipped at 0, median bandwidth"}}}};
}

Json sampler_json(const SamplerSpec& s) {
  Json j = {{"chains", s.chains}, {"steps", s.steps}, {"thin", s.thin}};
  j["burn_in"] = s.burn_in ? Json(*s.burn_in) : Json("20% of steps");
  return j;
}

std::uint64_t kind_index(proposal::Kind k) {
  switch (k) {
    case proposal::Kind::rw: return 0;
    case proposal::Kind::mala: return 1;
    case proposal::Kind::pcn: return 2;
  }
  return 0;
}

proposal::ProposalKernel kernel_for(proposal::Kind k, double step, const scorematch::ScoreModel& s) {
  switch (k) {
    case proposal::Kind::rw: return proposal::ProposalKernel::rw(s.dim(), step);
    case proposal::Kind::mala: return proposal::ProposalKernel::mala(step, s);
    case proposal::Kind::pcn: return proposal::ProposalKernel::pcn(s.dim(), step);
  }
  throw ArgumentError("unknown proposal");
}

sampler::RunResult run(const sampler::Transition& t, const SamplerSpec& spec, std::uint64_t seed,
                       const sampler::InitSpec& init, int jobs) {
  sampler::RunConfig rc;
  rc.n_chains = spec.chains;
  rc.n_steps = spec.steps;
  rc.burn_in = spec.burn_in;
  rc.thin = spec.thin;
  rc.seed = seed;
  rc.jobs = jobs;
  rc.init = init;
  return sampler::run_chains(t, rc);
}

// Diverged chains produce non-finite samples; report them as infinite distance.
metrics::MetricsReport score_samples(const Array& samples, const Array& ref, std::uint64_t seed,
                                     const std::string& dataset, const std::string& method) {
  metrics::MetricsConfig mc;
  mc.seed = seed;
  mc.n_eval = std::min<Eigen::Index>({1000, samples.rows(), ref.rows()});
  try {
    return metrics::evaluate(samples, ref, mc, dataset, method);
  } catch (const NumericError&) {
    metrics::MetricsReport r;
    r.dataset = dataset;
    r.method = method;
    r.w1 = r.w2 = r.mmd = kInf;
    r.n_eval = mc.n_eval;
    r.seed = seed;
    return r;
  }
}

// Table and figure sampling defaults: 500 chains, 500 steps, first 100
// discarded, every 50th state kept.
SamplerSpec table_sampler() { return SamplerSpec{500, 500, std::nullopt, 50}; }

struct Fitted {
  data::PointCloud data;
  data::PointCloud reference;
  scorematch::ScoreTraining score;
};

Fitted fit_dataset(const std::string& name, const Preset& p, const PipelineOptions& opt) {
  DatasetSpec ds;
  ds.name = name;
  Fitted f;
  f.data = make_dataset(ds, stream(opt, kData));
  f.reference = make_dataset(ds, stream(opt, kReference));
  f.score = fit_score(p, f.data, stream(opt, kScore), opt.scale);
  return f;
}

fs::path sidecar_svg(fs::path p) { return p.replace_extension(".svg"); }

void maybe_svg(const PipelineOptions& opt, const fs::path& p, const std::string& text) {
  if (opt.svg) write_text(p, text);
}

}  // namespace

Method parse_method(const std::string& s) {
  for (auto m : {Method::ula, Method::score_rw, Method::score_mala, Method::score_pcn,
                 Method::exact_mh, Method::taylor_mh}) {
    if (to_string(m) == s) return m;
  }
  std::string all;
  for (const auto& n : method_names()) all += (all.empty() ? "" : "|") + n;
  throw ArgumentError("unknown method '" + s + "' (expected " + all + ")");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::ula: return "ula";
    case Method::score_rw: return "score-rw";
    case Method::score_mala: return "score-mala";
    case Method::score_pcn: return "score-pcn";
    case Method::exact_mh: return "exact-mh";
    case Method::taylor_mh: return "taylor-mh";
  }
  return "?";
}

std::vector<std::string> method_names() {
  return {"ula", "score-rw", "score-mala", "score-pcn", "exact-mh", "taylor-mh"};
}

proposal::Kind method_kernel(Method m) {
  switch (m) {
    case Method::score_rw: return proposal::Kind::rw;
    case Method::score_mala: return proposal::Kind::mala;
    case Method::score_pcn: return proposal::Kind::pcn;
    default: break;
  }
  throw ArgumentError(to_string(m) + " has no learned proposal kernel");
}

int scaled_epochs(int epochs, double scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw ArgumentError("epoch scale must be >= 0");
  return static_cast<int>(std::lround(epochs * scale));
}

scorematch::ScoreTraining fit_score(const Preset& p, const data::PointCloud& data,
                                    std::uint64_t seed, double scale) {
  auto cfg = p.score;
  cfg.epochs = scaled_epochs(cfg.epochs, scale);
  cfg.seed = seed;
  return scorematch::train_score(data, cfg);
}

accept::AcceptanceTraining fit_acceptance(const Preset& p, const data::PointCloud& data,
                                          const scorematch::ScoreModel& score,
                                          const proposal::ProposalKernel& kernel,
                                          std::uint64_t seed, double scale,
                                          std::optional<double> lambda) {
  auto cfg = p.acceptance;
  cfg.epochs = scaled_epochs(cfg.epochs, scale);
  cfg.seed = seed;
  if (lambda) cfg.lambda = *lambda;
  return accept::train_acceptance(data, score, kernel, cfg);
}

sampler::InitSpec data_init(const data::PointCloud& data) {
  sampler::InitSpec init;
  init.mean = data.mean();
  init.scale = data.stddev();
  return init;
}

const metrics::MetricsReport* Table1Result::find(const std::string& dataset,
                                                  const std::string& method) const {
  for (const auto& r : rows) {
    if (r.dataset == dataset && r.method == method) return &r;
  }
  return nullptr;
}

double StepSweep::spread(const std::vector<double>& w) {
  if (w.empty()) throw ArgumentError("spread of an empty sweep");
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  if (!std::isfinite(*hi)) return kInf;
  return *hi / *lo;
}

Table1Result reproduce_table1(const PipelineOptions& opt, std::vector<Method> methods) {
  const fs::path dir = opt.out_dir / "table1";
  fs::create_directories(dir);
  const auto names = opt.datasets.empty() ? preset_names() : opt.datasets;
  Table1Result result;
  Json manifest = base_manifest("table1", opt);
  manifest["sampler"] = sampler_json(table_sampler());
  manifest["init"] = "N(data mean, diag(data std^2))";
  Json outputs = Json::array();

  for (const auto& name : names) {
    const Preset p = preset(name);
    const Fitted f = fit_dataset(name, p, opt);
    const auto init = data_init(f.data);
    Json entry = {{"dataset", DatasetSpec{.name = name}.to_json()},
                  {"score", to_json(p.score)},
                  {"score_heldout_loss", f.score.heldout_loss}};
    entry["score"]["epochs"] = scaled_epochs(p.score.epochs, opt.scale);
    for (Method m : methods) {
      sampler::Transition t;
      Json mj;
      if (m == Method::ula) {
        t = sampler::Transition::ula(f.score.model, p.ula_eps);
        mj = {{"eps", p.ula_eps}};
      } else {
        const auto kind = method_kernel(m);
        const auto kernel = kernel_for(kind, preset_step(p, kind), f.score.model);
        const auto fit = fit_acceptance(p, f.data, f.score.model, kernel,
                                        stream(opt, kAcceptance + kind_index(kind)), opt.scale);
        t = sampler::Transition::mh(kernel, fit.model);
        mj = {{"proposal", kernel.describe()}, {"acceptance", to_json(p.acceptance)}};
        mj["acceptance"]["epochs"] = scaled_epochs(p.acceptance.epochs, opt.scale);
      }
      const auto seed = stream(opt, kSampler + static_cast<std::uint64_t>(m));
      const auto res = run(t, table_sampler(), seed, init, opt.jobs);
      auto report = score_samples(res.samples.points, f.reference.points, stream(opt, kMetrics),
                                  name, to_string(m));
      mj["acceptance_rate"] = res.acceptance_rate();
      mj["sampler_seed"] = seed;
      entry[to_string(m)] = mj;
      const auto csv = dir / ("samples_" + name + "_" + to_string(m) + ".csv");
      data::write_csv(res.samples, csv);
      outputs.push_back(csv.filename().string());
      maybe_svg(opt, sidecar_svg(csv), svg_scatter(res.samples.points, name + " " + to_string(m)));
      result.rows.push_back(std::move(report));
    }
    manifest["datasets"].push_back(entry);
  }

  auto f = open_csv(dir / "table1.csv");
  f << metrics::report_header() << '\n';
  for (const auto& r : result.rows) f << metrics::report_row(r) << '\n';
  outputs.push_back("table1.csv");
  manifest["outputs"] = outputs;
  write_json(dir / "manifest.json", manifest);
  return result;
}

MixtureResult reproduce_fig1(const PipelineOptions& opt) {
  const fs::path dir = opt.out_dir / "fig1-mixture";
  fs::create_directories(dir);
  const auto target = data::AnalyticTarget::two_mode_mixture(0.8);
  const auto score = scorematch::ScoreModel::analytic(target);

  const int chains = 100;
  SamplerSpec spec{chains, 12500, std::nullopt, 1};
  sampler::InitSpec init;
  Array starts(chains, 2);
  for (int i = 0; i < chains; ++i) starts.row(i).setConstant(i % 2 ? -5.0 : 5.0);
  init.cloud = starts;
  Array modes(2, 2);
  modes << 5.0, 5.0, -5.0, -5.0;

  struct Run {
    std::string name;
    sampler::Transition t;
  };
  const auto rw = proposal::ProposalKernel::rw(2, 6.0);
  const auto mala = proposal::ProposalKernel::mala(4.5, score);
  const std::vector<Run> runs = {
      {"ula", sampler::Transition::ula(score, 0.1)},
      {"rw", sampler::Transition::mh(rw, accept::AcceptanceModel::exact(target, rw))},
      {"mala", sampler::Transition::mh(mala, accept::AcceptanceModel::exact(target, mala))}};

  MixtureResult out;
  Json manifest = base_manifest("fig1-mixture", opt);
  manifest["target"] = {{"pi", 0.8}, {"modes", "(5,5), (-5,-5)"}, {"covariance", "I"}};
  manifest["sampler"] = sampler_json(spec);
  manifest["init"] = "chains alternate between (5,5) and (-5,-5)";
  manifest["csv_thin"] = 100;
  Json outputs = Json::array();
  auto wf = open_csv(dir / "weights.csv");
  wf << "method,weight_pos,weight_neg,acceptance,states\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto seed = stream(opt, kSampler + i);
    const auto res = run(runs[i].t, spec, seed, init, opt.jobs);
    const Vector w = metrics::mixture_weights(res.samples.points, modes);
    out.methods.push_back(runs[i].name);
    out.weights.push_back(w);
    out.acceptance.push_back(res.acceptance_rate());
    wf << runs[i].name << ',' << fmt(w[0]) << ',' << fmt(w[1]) << ','
       << fmt(res.acceptance_rate()) << ',' << res.samples.size() << '\n';
    // Weights use every state; the CSV keeps every 100th to stay small.
    const Eigen::Index keep = (res.samples.size() + 99) / 100;
    Array thin(keep, 2);
    for (Eigen::Index r = 0; r < keep; ++r) thin.row(r) = res.samples.points.row(r * 100);
    const auto csv = dir / ("samples_" + runs[i].name + ".csv");
    data::write_csv(data::PointCloud(thin), csv);
    outputs.push_back(csv.filename().string());
    manifest["runs"][runs[i].name] = {{"transition", runs[i].t.describe()}, {"seed", seed}};
    maybe_svg(opt, sidecar_svg(csv), svg_scatter(thin, "mixture " + runs[i].name));
  }
  outputs.push_back("weights.csv");
  manifest["outputs"] = outputs;
  write_json(dir / "manifest.json", manifest);
  return out;
}

LambdaSweep reproduce_fig4(const PipelineOptions& opt, std::vector<double> lambdas, int epochs) {
  const fs::path dir = opt.out_dir / "fig4-lambda-sweep";
  fs::create_directories(dir);
  Preset p = preset("moons");
  p.acceptance.epochs = epochs;
  const Fitted f = fit_dataset("moons", p, opt);
  const auto kernel = kernel_for(proposal::Kind::mala, p.mala_eps, f.score.model);
  const Vector from = Vector::Zero(2);
  Vector lo(2), hi(2);
  lo << -1.5, -1.0;
  hi << 2.25, 1.5;
  const int grid = 50;

  LambdaSweep out;
  auto csv = open_csv(dir / "lambda_acceptance.csv");
  csv << "lambda,mean_acceptance\n";
  for (double lam : lambdas) {
    const auto fit = fit_acceptance(p, f.data, f.score.model, kernel,
                                    stream(opt, kAcceptance + kind_index(proposal::Kind::mala)),
                                    opt.scale, lam);
    const double m = accept::grid_mean_acceptance(fit.model, from, lo, hi, grid);
    out.lambdas.push_back(lam);
    out.mean_acceptance.push_back(m);
    csv << fmt(lam) << ',' << fmt(m) << '\n';
  }
  Json manifest = base_manifest("fig4-lambda-sweep", opt);
  manifest["score"] = to_json(p.score);
  manifest["acceptance"] = to_json(p.acceptance);
  manifest["acceptance"]["epochs"] = scaled_epochs(epochs, opt.scale);
  manifest["proposal"] = kernel.describe();
  manifest["grid"] = {{"from", {0.0, 0.0}}, {"lo", {-1.5, -1.0}}, {"hi", {2.25, 1.5}}, {"n", grid}};
  manifest["outputs"] = {"lambda_acceptance.csv"};
  if (opt.svg) {
    write_text(dir / "lambda_acceptance.svg",
               svg_lines({{"mean acceptance", out.lambdas, out.mean_acceptance}},
                         "grid mean acceptance vs lambda", "lambda", "mean a"));
  }
  write_json(dir / "manifest.json", manifest);
  return out;
}

StepSweep reproduce_fig5(const PipelineOptions& opt, std::vector<double> steps) {
  const fs::path dir = opt.out_dir / "fig5-stepsize";
  fs::create_directories(dir);
  const Preset p = preset("moons");
  const Fitted f = fit_dataset("moons", p, opt);
  const auto init = data_init(f.data);
  const auto spec = table_sampler();
  StepSweep out;
  auto csv = open_csv(dir / "stepsize_w1.csv");
  csv << "step,w1_ula,w1_mala,mala_acceptance\n";
  for (double eps : steps) {
    const auto kernel = kernel_for(proposal::Kind::mala, eps, f.score.model);
    const auto fit = fit_acceptance(p, f.data, f.score.model, kernel,
                                    stream(opt, kAcceptance + kind_index(proposal::Kind::mala)),
                                    opt.scale);
    const auto ru = run(sampler::Transition::ula(f.score.model, eps), spec,
                        stream(opt, kSampler + static_cast<std::uint64_t>(Method::ula)), init,
                        opt.jobs);
    const auto rm = run(sampler::Transition::mh(kernel, fit.model), spec,
                        stream(opt, kSampler + static_cast<std::uint64_t>(Method::score_mala)),
                        init, opt.jobs);
    const double wu = score_samples(ru.samples.points, f.reference.points, stream(opt, kMetrics),
                                    "moons", "ula").w1;
    const double wm = score_samples(rm.samples.points, f.reference.points, stream(opt, kMetrics),
                                    "moons", "score-mala").w1;
    out.steps.push_back(eps);
    out.w1_ula.push_back(wu);
    out.w1_mala.push_back(wm);
    out.mala_acceptance.push_back(rm.acceptance_rate());
    csv << fmt(eps) << ',' << fmt(wu) << ',' << fmt(wm) << ',' << fmt(rm.acceptance_rate()) << '\n';
  }
  Json manifest = base_manifest("fig5-stepsize", opt);
  manifest["score"] = to_json(p.score);
  manifest["acceptance"] = to_json(p.acceptance);
  manifest["sampler"] = sampler_json(spec);
  manifest["steps"] = steps;
  manifest["spread"] = {{"ula", StepSweep::spread(out.w1_ula)},
                        {"mala", StepSweep::spread(out.w1_mala)}};
  manifest["outputs"] = {"stepsize_w1.csv"};
  if (opt.svg) {
    // Diverged runs are left off the plot.
    auto finite = [](const std::vector<double>& x, const std::vector<double>& y) {
      Series s;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (std::isfinite(y[i]) && y[i] < 1e6) {
          s.x.push_back(x[i]);
          s.y.push_back(y[i]);
        }
      }
      return s;
    };
    Series u = finite(out.steps, out.w1_ula), m = finite(out.steps, out.w1_mala);
    u.label = "ULA";
    m.label = "score MALA";
    write_text(dir / "stepsize_w1.svg", svg_lines({u, m}, "W1 vs step size", "step", "W1"));
  }
  write_json(dir / "manifest.json", manifest);
  return out;
}

TaylorCurves reproduce_figA(const PipelineOptions& opt) {
  const fs::path dir = opt.out_dir / "figA-taylor";
  fs::create_directories(dir);
  TaylorCurves out;
  const std::vector<accept::Kind> kinds = {accept::Kind::taylor1, accept::Kind::taylor1_avg,
                                           accept::Kind::taylor2, accept::Kind::taylor2_avg};
  for (auto k : kinds) out.variants.push_back(accept::to_string(k));
  for (int i = 0; i <= 24; ++i) out.distances.push_back(std::pow(10.0, -3.0 + i * 0.125));

  // log p = -x^4: score -4x^3, Hessian -12x^2. rw proposal terms cancel.
  const auto quartic = scorematch::ScoreModel::callable(
      1, [](const Array& x) -> Array { return -4.0 * x.array().cube(); },
      [](const Vector& x) -> Array { return Array::Constant(1, 1, -12.0 * x[0] * x[0]); });
  const auto rw1 = proposal::ProposalKernel::rw(1, 1.0);
  const double x0 = 0.7;

  Array cov(2, 2);
  cov << 1.0, 0.3, 0.3, 0.5;
  Vector mean(2);
  mean << 0.5, -0.3;
  const auto gauss = data::AnalyticTarget::gaussian(mean, cov);
  const auto gscore = scorematch::ScoreModel::analytic(gauss);
  const auto rw2 = proposal::ProposalKernel::rw(2, 1.0);
  Vector g0(2), dir2(2);
  g0 << 1.2, 0.4;
  dir2 << 1.0, 2.0;
  dir2.normalize();

  out.quartic_error.assign(kinds.size(), {});
  out.gaussian_error.assign(kinds.size(), {});
  auto csv = open_csv(dir / "taylor_error.csv");
  csv << "distance,variant,quartic_error,gaussian_error\n";
  for (double t : out.distances) {
    const Array qf = Array::Constant(1, 1, x0), qt = Array::Constant(1, 1, x0 + t);
    const double q_exact = -std::pow(x0 + t, 4) + std::pow(x0, 4);
    const Array gf = g0.transpose();
    const Array gt = (g0 + t * dir2).transpose();
    const double g_exact = accept::exact_log_ratio(gauss, rw2, gt, gf)[0];
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const double qe = std::abs(accept::taylor_log_ratio(quartic, rw1, qt, qf, kinds[k],
                                                          accept::HessianMode::autodiff)[0] -
                                 q_exact);
      const double ge = std::abs(accept::taylor_log_ratio(gscore, rw2, gt, gf, kinds[k],
                                                          accept::HessianMode::autodiff)[0] -
                                 g_exact);
      out.quartic_error[k].push_back(qe);
      out.gaussian_error[k].push_back(ge);
      csv << fmt(t) << ',' << out.variants[k] << ',' << fmt(qe) << ',' << fmt(ge) << '\n';
    }
  }
  if (opt.svg) {
    std::vector<Series> series;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      Series s{out.variants[k], {}, {}};
      for (std::size_t i = 0; i < out.distances.size(); ++i) {
        s.x.push_back(std::log10(out.distances[i]));
        s.y.push_back(std::log10(std::max(out.quartic_error[k][i], 1e-300)));
      }
      series.push_back(std::move(s));
    }
    write_text(dir / "taylor_quartic.svg",
               svg_lines(series, "Taylor log-ratio error on -x^4", "log10 distance", "log10 error"));
  }
  Json manifest = base_manifest("figA-taylor", opt);
  manifest["quartic"] = {{"log_p", "-x^4"}, {"from", x0}, {"proposal", rw1.describe()}};
  manifest["gaussian"] = {{"mean", {0.5, -0.3}},
                          {"covariance", {{1.0, 0.3}, {0.3, 0.5}}},
                          {"from", {1.2, 0.4}},
                          {"direction", "(1,2)/sqrt(5)"}};
  manifest["hessian"] = "autodiff";
  manifest["outputs"] = {"taylor_error.csv"};
  write_json(dir / "manifest.json", manifest);
  return out;
}

std::vector<std::string> reproduce_ids() {
  return {"table1", "fig1-mixture", "fig4-lambda-sweep", "fig5-stepsize", "figA-taylor"};
}

void reproduce(const std::string& id, const PipelineOptions& opt) {
  if (id == "table1") {
    reproduce_table1(opt);
  } else if (id == "fig1-mixture") {
    reproduce_fig1(opt);
  } else if (id == "fig4-lambda-sweep") {
    reproduce_fig4(opt);
  } else if (id == "fig5-stepsize") {
    reproduce_fig5(opt);
  } else if (id == "figA-taylor") {
    reproduce_figA(opt);
  } else {
    std::string all;
    for (const auto& n : reproduce_ids()) all += (all.empty() ? "" : ", ") + n;
    throw ArgumentError("unknown reproduce id '" + id + "'; available: " + all);
  }
}

}  // namespace sbmh::cli
