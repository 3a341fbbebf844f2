#include "sbmh/cli/commands.hpp"

#include "sbmh/cli/checkpoint.hpp"
#include "sbmh/cli/config.hpp"
#include "sbmh/cli/pipelines.hpp"
#include "sbmh/cli/svg.hpp"
#include "sbmh/error.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace sbmh::cli {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
  std::string s;
  for (const auto& e : v) s += (s.empty() ? "" : sep) + e;
  return s;
}

fs::path sidecar(const fs::path& p, const std::string& suffix) {
  fs::path q = p;
  q.replace_extension();
  return q.string() + suffix;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// Options shared by every command that needs a point cloud.
struct DataOptions {
  std::string path;
  std::optional<std::string> name;
  std::optional<Eigen::Index> n;
  std::optional<double> noise;
  std::optional<double> pi;

  void add(CLI::App* sub) {
    sub->add_option("--data", path, "point cloud CSV");
    sub->add_option("--dataset", name, "generate instead: " + join(dataset_names(), "|"));
    sub->add_option("--n", n, "points to generate");
    sub->add_option("--noise", noise, "generator noise");
    sub->add_option("--pi", pi, "mixture weight of the (5,5) mode");
  }

  DatasetSpec spec() const {
    DatasetSpec s;
    if (name) s.name = *name;
    if (n) s.n = *n;
    s.noise = noise;
    if (pi) s.pi = *pi;
    return s;
  }

  bool given() const { return !path.empty() || name.has_value(); }

  data::PointCloud load(std::uint64_t seed) const {
    if (!path.empty()) return data::read_csv(path);
    if (name) return make_dataset(spec(), seed);
    throw ArgumentError("no data: pass --data FILE or --dataset NAME");
  }

  Json describe() const {
    if (!path.empty()) return {{"csv", path}};
    if (name) return spec().to_json();
    return nullptr;
  }
};

struct GenData {
  DatasetSpec spec;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--dataset", spec.name, join(dataset_names(), "|"))->required();
    sub->add_option("--n", spec.n, "number of points");
    sub->add_option("--noise", noise, "noise level (moons/scurve 0.1, swissroll 0.5)");
    sub->add_option("--classes", spec.classes, "pinwheel arms");
    sub->add_option("--radial-std", spec.radial_std);
    sub->add_option("--tangential-std", spec.tangential_std);
    sub->add_option("--rate", spec.rate, "pinwheel twist rate");
    sub->add_option("--pi", spec.pi, "mixture weight");
    sub->add_option("--xi", spec.xi, "GEV shape");
    sub->add_option("--mu", spec.mu, "GEV location");
    sub->add_option("--gev-sigma", spec.sigma, "GEV scale");
    sub->add_option("--seed", seed, "seed (falls back to SBMH_SEED)");
    sub->add_option("--out", out, "output CSV")->required();
  }

  int run(const std::vector<std::string>& argv, std::ostream& os) {
    spec.noise = noise;
    const auto s = resolve_seed(seed);
    const auto cloud = make_dataset(spec, s);
    ensure_parent(out);
    data::write_csv(cloud, out);
    Json m = {{"command", "gen-data"}, {"argv", argv}, {"seed", s}, {"dataset", spec.to_json()},
              {"outputs", {out}}};
    write_json(sidecar(out, ".manifest.json"), m);
    os << "wrote " << cloud.size() << " points to " << out << '\n';
    return 0;
  }
};

struct TrainScore {
  DataOptions data;
  std::optional<std::string> preset_name;
  std::optional<std::string> method;
  std::optional<int> epochs, batch, projections, hidden, hidden_layers;
  std::optional<double> lr, sigma, clip, holdout;
  std::optional<std::uint64_t> seed;
  std::string out, loss_csv;

  void add(CLI::App* sub) {
    data.add(sub);
    sub->add_option("--preset", preset_name, join(preset_names(), "|"));
    sub->add_option("--method", method, "sliced|hyvarinen|denoising");
    sub->add_option("--epochs", epochs, "minibatch updates");
    sub->add_option("--lr", lr);
    sub->add_option("--batch", batch);
    sub->add_option("--sigma", sigma, "denoising noise (<= 0: 0.1 x data std)");
    sub->add_option("--projections", projections, "sliced projections per point");
    sub->add_option("--hidden", hidden);
    sub->add_option("--hidden-layers", hidden_layers);
    sub->add_option("--clip", clip, "parameter gradient clip");
    sub->add_option("--holdout", holdout, "held-out fraction");
    sub->add_option("--seed", seed, "seed (falls back to SBMH_SEED)");
    sub->add_option("--out", out, "checkpoint JSON")->required();
    sub->add_option("--loss-csv", loss_csv, "loss trace (default <out>.loss.csv)");
  }

  scorematch::SMConfig config(std::uint64_t s) const {
    scorematch::SMConfig c = preset_name ? preset(*preset_name).score : scorematch::SMConfig{};
    if (method) c.method = scorematch::parse_method(*method);
    if (epochs) c.epochs = *epochs;
    if (lr) c.lr = *lr;
    if (batch) c.batch_size = *batch;
    if (sigma) c.sigma = *sigma;
    if (projections) c.projections = *projections;
    if (hidden) c.hidden = *hidden;
    if (hidden_layers) c.hidden_layers = *hidden_layers;
    if (clip) c.clip = *clip;
    if (holdout) c.holdout = *holdout;
    c.seed = s;
    return c;
  }

  int run(const std::vector<std::string>& argv, std::ostream& os) {
    const auto s = resolve_seed(seed);
    const auto cloud = data.load(derive_seed(s, 100));
    const auto cfg = config(s);
    const auto fit = scorematch::train_score(cloud, cfg);
    const Json cj = to_json(cfg);
    ScoreCheckpoint ck{fit.net,
                       {{"config", cj},
                        {"config_hash", config_hash(cj)},
                        {"seed", s},
                        {"epochs_completed", fit.loss_trace.size()},
                        {"final_loss", fit.loss_trace.empty() ? 0.0 : fit.loss_trace.back()},
                        {"heldout_loss", fit.heldout_loss},
                        {"data", data.describe()}}};
    save_checkpoint(out, ck);
    const fs::path trace = loss_csv.empty() ? sidecar(out, ".loss.csv") : fs::path(loss_csv);
    ensure_parent(trace);
    scorematch::write_loss_trace(trace, fit.loss_trace);
    Json m = {{"command", "train-score"}, {"argv", argv}, {"seed", s}, {"config", cj},
              {"data", data.describe()}, {"heldout_loss", fit.heldout_loss},
              {"outputs", {out, trace.string()}}};
    write_json(sidecar(out, ".manifest.json"), m);
    os << "score checkpoint " << out << " (held-out loss " << fit.heldout_loss << ")\n";
    return 0;
  }
};

scorematch::ScoreModel load_score_model(const std::string& path) {
  if (path.empty()) throw ArgumentError("a score checkpoint is required (--score FILE)");
  return scorematch::ScoreModel::network(load_score_checkpoint(path).net);
}

proposal::ProposalKernel make_kernel(proposal::Kind kind, double step, int dim,
                                     const std::optional<scorematch::ScoreModel>& score) {
  switch (kind) {
    case proposal::Kind::rw: return proposal::ProposalKernel::rw(dim, step);
    case proposal::Kind::pcn: return proposal::ProposalKernel::pcn(dim, step);
    case proposal::Kind::mala:
      if (!score) throw ArgumentError("the mala proposal needs a score (--score or --target)");
      return proposal::ProposalKernel::mala(step, *score);
  }
  throw ArgumentError("unknown proposal");
}

struct TrainAcceptance {
  DataOptions data;
  std::string score_path;
  std::optional<std::string> preset_name;
  std::string proposal = "mala";
  std::optional<double> step;
  std::optional<double> lambda, lr, alpha_start, alpha_end, clip, grad_clip;
  std::optional<int> epochs, batch, hidden, blocks;
  std::optional<std::string> pairing;
  std::optional<std::uint64_t> seed;
  std::string out, trace_csv;

  void add(CLI::App* sub) {
    data.add(sub);
    sub->add_option("--score", score_path, "score checkpoint")->required();
    sub->add_option("--preset", preset_name, join(preset_names(), "|"));
    sub->add_option("--proposal", proposal, "rw|mala|pcn");
    sub->add_option("--step", step, "rw sigma, mala eps or pcn beta");
    sub->add_option("--lambda", lambda, "entropy weight");
    sub->add_option("--epochs", epochs, "minibatch updates");
    sub->add_option("--lr", lr);
    sub->add_option("--batch", batch);
    sub->add_option("--alpha-start", alpha_start);
    sub->add_option("--alpha-end", alpha_end);
    sub->add_option("--clip", clip, "residual term clip");
    sub->add_option("--grad-clip", grad_clip, "parameter gradient clip");
    sub->add_option("--hidden", hidden);
    sub->add_option("--blocks", blocks, "residual blocks");
    sub->add_option("--pairing", pairing, "elementwise|cartesian");
    sub->add_option("--seed", seed, "seed (falls back to SBMH_SEED)");
    sub->add_option("--out", out, "checkpoint JSON")->required();
    sub->add_option("--trace-csv", trace_csv, "epoch,loss,mean_acceptance (default <out>.trace.csv)");
  }

  accept::SBMConfig config(std::uint64_t s) const {
    accept::SBMConfig c = preset_name ? preset(*preset_name).acceptance : accept::SBMConfig{};
    if (lambda) c.lambda = *lambda;
    if (epochs) c.epochs = *epochs;
    if (lr) c.lr = *lr;
    if (batch) c.batch_size = *batch;
    if (alpha_start) c.alpha_start = *alpha_start;
    if (alpha_end) c.alpha_end = *alpha_end;
    if (clip) c.clip = *clip;
    if (grad_clip) c.grad_clip = *grad_clip;
    if (hidden) c.hidden = *hidden;
    if (blocks) c.blocks = *blocks;
    if (pairing) c.pairing = accept::parse_pairing(*pairing);
    c.seed = s;
    return c;
  }

  int run(const std::vector<std::string>& argv, std::ostream& os) {
    const auto s = resolve_seed(seed);
    const auto score = load_score_model(score_path);
    const auto cloud = data.load(derive_seed(s, 100));
    const auto kind = proposal::parse_kind(proposal);
    const double st = step ? *step : preset_name ? preset_step(preset(*preset_name), kind) : 0.1;
    const auto kernel = make_kernel(kind, st, score.dim(), score);
    const auto cfg = config(s);
    const auto fit = accept::train_acceptance(cloud, score, kernel, cfg);
    const Json cj = to_json(cfg);
    AcceptanceCheckpoint ck;
    ck.net = fit.net;
    ck.proposal = kind;
    ck.proposal_parameter = st;
    ck.score_checkpoint = score_path;
    ck.training = {{"config", cj},
                   {"config_hash", config_hash(cj)},
                   {"seed", s},
                   {"epochs_completed", fit.loss_trace.size()},
                   {"final_loss", fit.loss_trace.empty() ? 0.0 : fit.loss_trace.back()},
                   {"data", data.describe()}};
    save_checkpoint(out, ck);
    const fs::path trace = trace_csv.empty() ? sidecar(out, ".trace.csv") : fs::path(trace_csv);
    ensure_parent(trace);
    accept::write_training_trace(trace, fit);
    Json m = {{"command", "train-acceptance"}, {"argv", argv}, {"seed", s}, {"config", cj},
              {"proposal", kernel.describe()}, {"score_checkpoint", score_path},
              {"data", data.describe()}, {"outputs", {out, trace.string()}}};
    write_json(sidecar(out, ".manifest.json"), m);
    os << "acceptance checkpoint " << out << '\n';
    return 0;
  }
};

struct Sample {
  std::string method;
  std::string score_path, acceptance_path;
  std::optional<std::string> target;
  std::optional<double> pi, xi, mu, gev_sigma;
  std::optional<std::string> proposal;
  std::optional<double> step;
  std::string taylor = "taylor1_avg";
  std::string hessian = "fd";
  std::optional<int> chains, steps, burn_in;
  int thin = 1;
  std::string init = "auto";
  std::string data_path;
  double scale_acceptance = 1.0;
  int jobs = 1;
  std::string trace;
  std::optional<std::uint64_t> seed;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--method", method, join(method_names(), "|"))->required();
    sub->add_option("--score", score_path, "score checkpoint");
    sub->add_option("--acceptance", acceptance_path, "acceptance checkpoint (score-* methods)");
    sub->add_option("--target", target, "analytic target: mixture|gev|gaussian");
    sub->add_option("--pi", pi, "mixture weight");
    sub->add_option("--xi", xi, "GEV shape");
    sub->add_option("--mu", mu, "GEV location");
    sub->add_option("--gev-sigma", gev_sigma, "GEV scale");
    sub->add_option("--proposal", proposal, "rw|mala|pcn (exact-mh, taylor-mh)");
    sub->add_option("--step", step, "ula/mala eps, rw sigma or pcn beta");
    sub->add_option("--taylor-variant", taylor, "taylor1|taylor1_avg|taylor2|taylor2_avg");
    sub->add_option("--hessian", hessian, "fd|autodiff");
    sub->add_option("--chains", chains);
    sub->add_option("--steps", steps);
    sub->add_option("--burn-in", burn_in, "default 20% of steps");
    sub->add_option("--thin", thin);
    sub->add_option("--init", init, "auto|gaussian|modes|<csv>");
    sub->add_option("--data", data_path, "CSV whose mean/std scale the gaussian init");
    sub->add_option("--scale-acceptance", scale_acceptance, "use a / M");
    sub->add_option("--jobs", jobs, "worker threads");
    sub->add_option("--trace", trace, "per-step trace CSV");
    sub->add_option("--seed", seed, "seed (falls back to SBMH_SEED)");
    sub->add_option("--out", out, "samples CSV")->required();
  }

  std::optional<data::AnalyticTarget> analytic() const {
    if (!target) return std::nullopt;
    if (*target == "gaussian") return data::AnalyticTarget::standard_normal(2);
    DatasetSpec ds;
    ds.name = *target;
    if (pi) ds.pi = *pi;
    if (xi) ds.xi = *xi;
    if (mu) ds.mu = *mu;
    if (gev_sigma) ds.sigma = *gev_sigma;
    return make_target(ds);
  }

  int run(const std::vector<std::string>& argv, std::ostream& os) {
    const auto s = resolve_seed(seed);
    const Method m = parse_method(method);
    const auto tgt = analytic();
    const bool mixture = target && *target == "mixture";
    std::optional<scorematch::ScoreModel> score;
    if (!score_path.empty()) {
      score = load_score_model(score_path);
    } else if (tgt) {
      score = scorematch::ScoreModel::analytic(*tgt);
    }

    sampler::Transition tr;
    Json spec;
    if (m == Method::ula) {
      if (!score) throw ArgumentError("ula needs --score or --target");
      const double eps = step.value_or(0.1);
      tr = sampler::Transition::ula(*score, eps);
      spec = {{"eps", eps}};
    } else if (m == Method::exact_mh || m == Method::taylor_mh) {
      const auto kind = proposal::parse_kind(proposal.value_or("rw"));
      double st = step.value_or(0.1);
      if (!step && mixture) st = kind == proposal::Kind::mala ? 4.5 : 6.0;
      if (m == Method::exact_mh && !tgt) throw ArgumentError("exact-mh needs --target");
      if (m == Method::taylor_mh && !score) throw ArgumentError("taylor-mh needs --score or --target");
      const int dim = tgt ? tgt->dim() : score->dim();
      const auto kernel = make_kernel(kind, st, dim, score);
      auto a = m == Method::exact_mh
                   ? accept::AcceptanceModel::exact(*tgt, kernel)
                   : accept::AcceptanceModel::taylor(accept::parse_kind(taylor), *score, kernel,
                                                     accept::parse_hessian_mode(hessian));
      if (scale_acceptance != 1.0) a = a.scaled(scale_acceptance);
      tr = sampler::Transition::mh(kernel, a);
      spec = {{"proposal", kernel.describe()}, {"acceptance", a.describe()}};
    } else {
      if (acceptance_path.empty()) throw ArgumentError(method + " needs --acceptance FILE");
      const auto ck = load_acceptance_checkpoint(acceptance_path);
      if (ck.proposal != method_kernel(m)) {
        throw ArgumentError(acceptance_path + " was trained for the " + proposal::to_string(ck.proposal) +
                            " proposal, not " + proposal::to_string(method_kernel(m)));
      }
      if (step && *step != ck.proposal_parameter) {
        throw ArgumentError("--step differs from the step the acceptance was trained for (" +
                            std::to_string(ck.proposal_parameter) + ")");
      }
      const auto kernel = make_kernel(ck.proposal, ck.proposal_parameter, ck.net.dim(), score);
      auto a = accept::AcceptanceModel::learned(ck.net, kernel);
      if (scale_acceptance != 1.0) a = a.scaled(scale_acceptance);
      tr = sampler::Transition::mh(kernel, a);
      spec = {{"proposal", kernel.describe()}, {"acceptance", a.describe()},
              {"acceptance_checkpoint", acceptance_path}};
    }

    sampler::RunConfig cfg;
    cfg.seed = s;
    cfg.jobs = jobs;
    cfg.thin = thin;
    cfg.burn_in = burn_in;
    std::string init_kind = init;
    if (init_kind == "auto") init_kind = mixture ? "modes" : "gaussian";
    if (init_kind == "gaussian") {
      if (!data_path.empty()) {
        const auto d = data::read_csv(data_path);
        cfg.init = data_init(d);
      }
    } else if (init_kind == "modes") {
      if (!mixture) throw ArgumentError("--init modes needs --target mixture");
      const int n = chains.value_or(100);
      Array c(n, 2);
      for (int i = 0; i < n; ++i) c.row(i).setConstant(i % 2 ? -5.0 : 5.0);
      cfg.init.cloud = c;
    } else {
      cfg.init.cloud = data::read_csv(init_kind).points;
    }
    const int default_chains =
        cfg.init.cloud && init_kind != "modes" ? static_cast<int>(cfg.init.cloud->rows()) : 100;
    cfg.n_chains = chains.value_or(default_chains);
    cfg.n_steps = steps.value_or(mixture ? 12500 : 1000);
    if (cfg.n_steps == 0 && !burn_in) cfg.burn_in = 0;
    if (!trace.empty()) {
      ensure_parent(trace);
      cfg.trace = trace;
    }
    const auto res = sampler::run_chains(tr, cfg);
    ensure_parent(out);
    data::write_csv(res.samples, out);

    std::vector<double> rates;
    for (const auto& t : res.tallies) rates.push_back(t.rate());
    Json m_json = {{"command", "sample"},
                   {"argv", argv},
                   {"method", method},
                   {"seed", s},
                   {"chain_seeds", res.seeds},
                   {"transition", spec},
                   {"chains", cfg.n_chains},
                   {"steps", cfg.n_steps},
                   {"burn_in", cfg.resolved_burn_in()},
                   {"thin", cfg.thin},
                   {"init", init_kind},
                   {"acceptance_rate", res.acceptance_rate()},
                   {"chain_acceptance_rates", rates},
                   {"decisions",
                    {{"ula_update", "x + (eps^2/2) s(x) + eps z"},
                     {"accept_rule", "u ~ U(0,1], accept iff u <= a"},
                     {"chain_streams", "derive_seed(seed, chain)"}}},
                   {"outputs", {out}}};
    if (!trace.empty()) m_json["outputs"].push_back(trace);
    write_json(sidecar(out, ".manifest.json"), m_json);
    os << "wrote " << res.samples.size() << " samples to " << out << " (acceptance "
       << res.acceptance_rate() << ")\n";
    return 0;
  }
};

struct Evaluate {
  std::string samples, reference, out;
  std::optional<Eigen::Index> n_eval;
  std::optional<std::uint64_t> seed;
  std::optional<double> bandwidth;
  std::string w2 = "distance";
  std::string dataset, method;

  void add(CLI::App* sub) {
    sub->add_option("--samples", samples, "samples CSV")->required();
    sub->add_option("--reference", reference, "reference CSV")->required();
    sub->add_option("--n-eval", n_eval, "subsample size (default min(1000, sizes))");
    sub->add_option("--seed", seed, "subsample seed (falls back to SBMH_SEED)");
    sub->add_option("--bandwidth", bandwidth, "MMD kernel bandwidth (default: median heuristic)");
    sub->add_option("--w2-convention", w2, "distance|squared");
    sub->add_option("--dataset", dataset, "label for the report row");
    sub->add_option("--method", method, "label for the report row");
    sub->add_option("--out", out, "report CSV to append to");
  }

  int run(const std::vector<std::string>&, std::ostream& os) {
    const auto p = data::read_csv(samples);
    const auto q = data::read_csv(reference);
    metrics::MetricsConfig cfg;
    cfg.seed = resolve_seed(seed);
    cfg.bandwidth = bandwidth;
    cfg.w2 = metrics::parse_w2_convention(w2);
    cfg.n_eval = n_eval.value_or(std::min<Eigen::Index>({1000, p.size(), q.size()}));
    const auto r = metrics::evaluate(p.points, q.points, cfg, dataset, method);
    if (!out.empty()) {
      ensure_parent(out);
      metrics::append_report(out, r);
    }
    os << metrics::report_header() << '\n' << metrics::report_row(r) << '\n';
    return 0;
  }
};

struct Reproduce {
  std::string id;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  double scale = 1.0;
  std::vector<std::string> datasets;
  bool no_svg = false;

  void add(CLI::App* sub) {
    sub->add_option("id", id, join(reproduce_ids(), "|"))->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "seed (falls back to SBMH_SEED)");
    sub->add_option("--jobs", jobs, "sampler threads");
    sub->add_option("--scale", scale, "multiplier on every training epoch count");
    sub->add_option("--datasets", datasets, "table1 subset")->delimiter(',');
    sub->add_flag("--no-svg", no_svg, "skip SVG plots");
  }

  int run(const std::vector<std::string>& argv, std::ostream& os) {
    PipelineOptions opt;
    opt.out_dir = out;
    opt.seed = resolve_seed(seed);
    opt.jobs = jobs;
    opt.scale = scale;
    opt.datasets = datasets;
    opt.svg = !no_svg;
    opt.argv = argv;
    reproduce(id, opt);
    os << "wrote " << (fs::path(out) / id).string() << '\n';
    return 0;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Score-based Metropolis-Hastings: train, sample, evaluate, reproduce", "sbmh"};
  app.set_config("--config", "", "INI file; [subcommand] sections, command-line flags win");
  app.require_subcommand(1);
  app.fallthrough();

  GenData gen;
  TrainScore ts;
  TrainAcceptance ta;
  Sample sm;
  Evaluate ev;
  Reproduce rp;
  auto* c_gen = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
  auto* c_ts = app.add_subcommand("train-score", "fit a score network");
  auto* c_ta = app.add_subcommand("train-acceptance", "fit an acceptance network (SBM loss)");
  auto* c_sm = app.add_subcommand("sample", "run chains");
  auto* c_ev = app.add_subcommand("evaluate", "W1, W2, MMD of samples against a reference");
  auto* c_rp = app.add_subcommand("reproduce", "run a table/figure pipeline");
  gen.add(c_gen);
  ts.add(c_ts);
  ta.add(c_ta);
  sm.add(c_sm);
  ev.add(c_ev);
  rp.add(c_rp);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& c : msg) if (c == '\n') c = ' ';
    err << "error[usage]: " << msg << '\n';
    return 2;
  }

  try {
    if (c_gen->parsed()) return gen.run(args, out);
    if (c_ts->parsed()) return ts.run(args, out);
    if (c_ta->parsed()) return ta.run(args, out);
    if (c_sm->parsed()) return sm.run(args, out);
    if (c_ev->parsed()) return ev.run(args, out);
    if (c_rp->parsed()) return rp.run(args, out);
  } catch (const Error& e) {
    std::string msg = e.what();
    for (auto& c : msg) if (c == '\n') c = ' ';
    err << "error[" << e.kind() << "]: " << msg << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error[io]: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sbmh::cli
