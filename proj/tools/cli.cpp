#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "scav/kernels.hpp"
#include "scav/parallel.hpp"
#include "scav/retrieval.hpp"
#include "scav/seqdata.hpp"
#include "scav/trainer.hpp"
#include "scav/verification.hpp"

namespace scav::cli {

namespace {

namespace fs = std::filesystem;

struct MetricFlags {
  std::string metric = "eucl";
  std::string direction = "v2a";
  std::string stage = "post";
  double gamma = 0.1;
  double epsilon = 0.1;
  int iters = 100;
  double pos_weight = 1.0;
  bool metric_set = false;
};

void add_metric_flags(CLI::App* cmd, MetricFlags& m, bool with_stage) {
  cmd->add_option("--metric", m.metric, "eucl | sdtw | dtw | wass")
      ->check(CLI::IsMember({"eucl", "sdtw", "dtw", "wass"}))
      ->each([&m](const std::string&) { m.metric_set = true; });
  cmd->add_option("--direction", m.direction, "interpolation direction (v2a | a2v)")
      ->check(CLI::IsMember({"v2a", "a2v"}));
  if (with_stage)
    cmd->add_option("--stage", m.stage, "interpolation stage (pre | post)")
        ->check(CLI::IsMember({"pre", "post"}));
  cmd->add_option("--gamma", m.gamma, "soft-DTW temperature");
  cmd->add_option("--epsilon", m.epsilon, "Sinkhorn entropic regularization");
  cmd->add_option("--iters", m.iters, "Sinkhorn iterations");
  cmd->add_option("--pos-weight", m.pos_weight, "Wasserstein positional cost weight");
}

DistanceKind resolve_metric(const MetricFlags& m) {
  DistanceKind kind;
  if (m.metric == "eucl")
    kind = EuclInterp{parse_direction(m.direction), parse_stage(m.stage)};
  else if (m.metric == "sdtw")
    kind = SoftDtw{m.gamma};
  else if (m.metric == "dtw")
    kind = HardDtw{};
  else {
    Wasserstein w;
    w.epsilon = m.epsilon;
    w.iters = m.iters;
    w.pos_weight = m.pos_weight;
    kind = w;
  }
  validate(kind);
  return kind;
}

// Validation failures before any work starts map to exit code 1.
struct ValidationFailure : Error {
  using Error::Error;
};

template <typename F>
auto validating(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw ValidationFailure(e.what());
  }
}

void print(std::ostream& out, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  out << buf;
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

void log_config(const std::string& command, const KeyValues& kv) {
  std::cerr << "[scav " << command << "]";
  for (const auto& [k, v] : kv) std::cerr << ' ' << k << '=' << v;
  std::cerr << '\n';
}

template <typename T>
std::string str(const T& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<RetrievalMode> parse_modes(const std::string& spec, int default_k,
                                       const DistanceKind& kind) {
  std::vector<RetrievalMode> modes;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "agg") {
      modes.emplace_back(Agg{});
    } else if (tok == "seq") {
      modes.emplace_back(Seq{kind});
    } else if (tok.rfind("hybrid", 0) == 0) {
      int k = default_k;
      if (tok.size() > 6) {
        if (tok[6] != ':') throw InvalidArgument("bad mode '" + tok + "'");
        const auto digits = tok.substr(7);
        const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec != std::errc{} || end != digits.data() + digits.size() || digits.empty())
          throw InvalidArgument("bad hybrid pool size in '" + tok + "'");
      }
      modes.emplace_back(Hybrid{k, kind});
    } else {
      throw InvalidArgument("unknown retrieval mode '" + tok + "' (agg | seq | hybrid[:k])");
    }
  }
  if (modes.empty()) throw InvalidArgument("no retrieval modes given");
  return modes;
}

// ---------------------------------------------------------------------------

void setup_gen_synthetic(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  auto* cmd = app.add_subcommand("gen-synthetic", "write a synthetic paired-sequence dataset");
  auto cfg = std::make_shared<SynthConfig>();
  auto out_path = std::make_shared<std::string>();
  cmd->add_option("--pairs", cfg->num_pairs, "number of pairs");
  cmd->add_option("--dim-v", cfg->dim_v, "video feature dim");
  cmd->add_option("--dim-a", cfg->dim_a, "audio feature dim");
  cmd->add_option("--latent-dim", cfg->latent_dim, "latent trajectory dim");
  cmd->add_option("--len-v", cfg->len_v, "video length (frames)");
  cmd->add_option("--len-a", cfg->len_a, "audio length (frames)");
  cmd->add_option("--noise-std", cfg->noise_std, "additive Gaussian noise");
  cmd->add_option("--distractor-corr", cfg->distractor_correlation, "shared-latent mixing rho");
  cmd->add_option("--seed", cfg->seed, "RNG seed");
  cmd->add_option("--id-offset", cfg->id_offset, "first pair index used in ids");
  cmd->add_flag("--identity-projections", cfg->identity_projections,
                "use identity feature maps (dims must equal latent dim)");
  cmd->add_option("--out", *out_path, "output directory")->required();
  cmd->callback([&action, &out, cfg, out_path] {
    action = [cfg, out_path, &out] {
      validating([&] {
        validate(*cfg);
        return 0;
      });
      log_config("gen-synthetic", {{"pairs", str(cfg->num_pairs)},
                                   {"dim_v", str(cfg->dim_v)},
                                   {"dim_a", str(cfg->dim_a)},
                                   {"latent_dim", str(cfg->latent_dim)},
                                   {"len_v", str(cfg->len_v)},
                                   {"len_a", str(cfg->len_a)},
                                   {"noise_std", str(cfg->noise_std)},
                                   {"distractor_corr", str(cfg->distractor_correlation)},
                                   {"identity_projections", str(cfg->identity_projections)},
                                   {"seed", str(cfg->seed)},
                                   {"out", *out_path}});
      const auto manifest = gen_synthetic(*cfg, *out_path);
      out << "wrote " << manifest.size() << " pairs to " << (fs::path(*out_path) / "manifest.tsv").string()
                << '\n';
    };
  });
}

void setup_dist(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  auto* cmd = app.add_subcommand("dist", "distance between two SEQF files (a = video role)");
  auto m = std::make_shared<MetricFlags>();
  auto a = std::make_shared<std::string>();
  auto b = std::make_shared<std::string>();
  add_metric_flags(cmd, *m, false);
  cmd->get_option("--metric")->required();
  cmd->add_option("--a", *a, "video-role SEQF file")->required();
  cmd->add_option("--b", *b, "audio-role SEQF file")->required();
  cmd->callback([&action, &out, m, a, b] {
    action = [m, a, b, &out] {
      const auto kind = validating([&] { return resolve_metric(*m); });
      log_config("dist", {{"metric", to_string(kind)}, {"a", *a}, {"b", *b}});
      const Matrix x = load_seqf(*a).to_double();
      const Matrix y = load_seqf(*b).to_double();
      double value;
      if (const auto* w = std::get_if<Wasserstein>(&kind)) {
        const auto r = wasserstein(x, y, *w, false);
        std::cerr << "sinkhorn iterations=" << r.iterations
                  << " marginal_violation=" << r.marginal_violation << '\n';
        value = r.value;
      } else {
        value = distance(x, y, kind);
      }
      print(out, "%.10g\n", value);
    };
  });
}

void setup_pairwise(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  auto* cmd = app.add_subcommand("pairwise", "pairwise distance matrix between two manifests");
  auto m = std::make_shared<MetricFlags>();
  auto videos = std::make_shared<std::string>();
  auto audios = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto workers = std::make_shared<int>(default_workers());
  add_metric_flags(cmd, *m, false);
  cmd->get_option("--metric")->required();
  cmd->add_option("--videos", *videos, "manifest whose video files form the rows")->required();
  cmd->add_option("--audios", *audios, "manifest whose audio files form the columns")->required();
  cmd->add_option("--out", *out_path, "output TSV")->required();
  cmd->add_option("--workers", *workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->callback([&action, &out, m, videos, audios, out_path, workers] {
    action = [=, &out] {
      const auto kind = validating([&] { return resolve_metric(*m); });
      log_config("pairwise", {{"metric", to_string(kind)},
                              {"videos", *videos},
                              {"audios", *audios},
                              {"workers", str(*workers)},
                              {"out", *out_path}});
      const auto vset = load_pairs(load_manifest(*videos));
      const auto aset = load_pairs(load_manifest(*audios));
      std::vector<Matrix> xs, ys;
      for (const auto& v : vset.videos) xs.push_back(v.to_double());
      for (const auto& a : aset.audios) ys.push_back(a.to_double());
      const auto d = pairwise_matrix(xs, ys, kind, *workers);
      std::ofstream os(*out_path);
      if (!os) throw IoError("cannot open " + *out_path);
      os << "video";
      for (const auto& a : aset.audios) os << '\t' << a.id;
      os << '\n';
      char buf[64];
      for (std::size_t i = 0; i < xs.size(); ++i) {
        os << vset.videos[i].id;
        for (std::size_t j = 0; j < ys.size(); ++j) {
          std::snprintf(buf, sizeof buf, "\t%.17g",
                        d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
          os << buf;
        }
        os << '\n';
      }
      if (!os) throw IoError("write failed: " + *out_path);
    };
  });
}

void setup_train(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  auto* cmd = app.add_subcommand("train", "train paired encoders with CAV, SCAV or both");
  auto cfg = std::make_shared<TrainConfig>();
  auto m = std::make_shared<MetricFlags>();
  m->stage = "pre";
  auto manifest = std::make_shared<std::string>();
  auto eval_manifest = std::make_shared<std::string>();
  auto ckpt = std::make_shared<std::string>();
  auto loss_out = std::make_shared<std::string>();
  auto loss = std::make_shared<std::string>("scav");
  auto no_norm = std::make_shared<bool>(false);
  cfg->workers = default_workers();

  cmd->add_option("--manifest", *manifest, "training manifest")->required();
  cmd->add_option("--loss", *loss, "cav | scav | multi")->check(CLI::IsMember({"cav", "scav", "multi"}));
  add_metric_flags(cmd, *m, true);
  cmd->add_option("--batch-size", cfg->batch_size, "pairs per batch");
  cmd->add_option("--steps", cfg->steps, "optimizer steps");
  cmd->add_option("--lr", cfg->base_lr, "base learning rate");
  cmd->add_option("--warmup", cfg->warmup_steps, "linear warm-up steps");
  cmd->add_option("--weight-decay", cfg->weight_decay, "decoupled weight decay");
  cmd->add_option("--seed", cfg->seed, "RNG seed");
  cmd->add_flag("--no-dist-norm", *no_norm, "disable z-score normalization of the distance matrix");
  cmd->add_option("--lambda-init", cfg->lambda_init, "initial SCAV temperature");
  cmd->add_option("--tau-init", cfg->tau_init, "initial CAV temperature");
  cmd->add_option("--multitask-weight", cfg->multitask_weight, "SCAV weight in the multitask loss");
  cmd->add_option("--hidden-dim", cfg->hidden_dim, "encoder hidden width");
  cmd->add_option("--latent-dim", cfg->latent_dim, "shared latent dim c");
  cmd->add_option("--max-len", cfg->max_len, "positional table size (0: longest training sequence)");
  cmd->add_option("--workers", cfg->workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--eval-manifest", *eval_manifest, "held-out manifest for recall@1 after training");
  cmd->add_option("--loss-out", *loss_out, "per-step loss TSV");
  cmd->add_option("--ckpt-out", *ckpt, "checkpoint path")->required();

  cmd->callback([&action, &out, cfg, m, manifest, eval_manifest, ckpt, loss_out, loss, no_norm] {
    action = [=, &out] {
      validating([&] {
        cfg->loss = parse_loss_kind(*loss);
        cfg->distance = resolve_metric(*m);
        cfg->normalize_distances = !*no_norm;
        validate(*cfg);
        return 0;
      });
      std::cerr << "[scav train] manifest=" << *manifest << " ckpt_out=" << *ckpt
                << " workers=" << cfg->workers << " config=" << config_json(*cfg) << '\n';
      const auto data = load_pairs(load_manifest(*manifest));
      std::optional<PairedDataset> heldout;
      if (!eval_manifest->empty()) heldout = load_pairs(load_manifest(*eval_manifest));
      const auto report = train(data, *cfg, heldout ? &*heldout : nullptr);
      save_checkpoint(report.model, *ckpt);
      if (!loss_out->empty()) {
        std::ofstream os(*loss_out);
        os << "step\tloss\n";
        char buf[64];
        for (std::size_t s = 0; s < report.losses.size(); ++s) {
          std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", s + 1, report.losses[s]);
          os << buf;
        }
        if (!os) throw IoError("write failed: " + *loss_out);
      }
      print(out, "steps=%zu final_loss=%.6f tau=%.6f lambda=%.6f elapsed_s=%.3f\n",
                  report.losses.size(), report.losses.back(), report.model.tau.value(),
                  report.model.lambda.value(), report.elapsed_seconds);
      if (report.eval)
        print(out, "eval recall@1 agg_a2v=%.4f agg_v2a=%.4f seq_a2v=%.4f seq_v2a=%.4f\n",
                    report.eval->agg_a2v, report.eval->agg_v2a, report.eval->seq_a2v,
                    report.eval->seq_v2a);
    };
  });
}

// Encodes with a checkpoint, or passes features through when none is given.
EncodedPairs load_encoded(const std::string& manifest, int workers, const std::optional<Model>& model) {
  const auto data = load_pairs(load_manifest(manifest));
  return model ? encode_pairs(*model, data, workers) : as_encoded(data);
}

DistanceKind seq_kind(const MetricFlags& m, const std::optional<Model>& model) {
  if (m.metric_set || !model) return resolve_metric(m);
  return retrieval_distance(*model);
}

void setup_retrieve(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  auto* cmd = app.add_subcommand("retrieve", "cross-modal retrieval over one paired manifest");
  auto ckpt = std::make_shared<std::string>();
  auto manifest = std::make_shared<std::string>();
  auto mode = std::make_shared<std::string>("agg");
  auto direction = std::make_shared<std::string>("a2v");
  auto k = std::make_shared<int>(100);
  auto out_path = std::make_shared<std::string>();
  auto workers = std::make_shared<int>(default_workers());
  auto m = std::make_shared<MetricFlags>();
  cmd->add_option("--ckpt", *ckpt, "checkpoint (omit to use features as latents)");
  cmd->add_option("--manifest", *manifest, "paired manifest")->required();
  cmd->add_option("--mode", *mode, "agg | seq | hybrid")->check(CLI::IsMember({"agg", "seq", "hybrid"}));
  cmd->add_option("--k", *k, "hybrid pre-selection size");
  cmd->add_option("--out", *out_path, "ranking TSV")->required();
  cmd->add_option("--workers", *workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--direction", *direction, "a2v | v2a (retrieval direction)")
      ->check(CLI::IsMember({"a2v", "v2a"}));
  cmd->add_option("--metric", m->metric, "override the sequence distance")
      ->check(CLI::IsMember({"eucl", "sdtw", "dtw", "wass"}))
      ->each([m](const std::string&) { m->metric_set = true; });
  cmd->add_option("--interp", m->direction, "interpolation direction of an overriding eucl metric")
      ->check(CLI::IsMember({"v2a", "a2v"}));
  cmd->add_option("--gamma", m->gamma, "soft-DTW temperature");
  cmd->add_option("--epsilon", m->epsilon, "Sinkhorn regularization");
  cmd->add_option("--iters", m->iters, "Sinkhorn iterations");
  cmd->add_option("--pos-weight", m->pos_weight, "Wasserstein positional weight");

  cmd->callback([=, &action, &out] {
    action = [=, &out] {
      std::optional<Model> model;
      if (!ckpt->empty()) model = load_checkpoint(*ckpt);
      const auto kind = validating([&] { return seq_kind(*m, model); });
      const auto dir = parse_direction(*direction);
      const auto modes = validating([&] { return parse_modes(*mode, *k, kind); });
      log_config("retrieve", {{"ckpt", ckpt->empty() ? std::string("<none>") : *ckpt},
                              {"manifest", *manifest},
                              {"mode", to_string(modes.front())},
                              {"direction", *direction},
                              {"seq_metric", to_string(kind)},
                              {"workers", str(*workers)},
                              {"out", *out_path}});
      const auto enc = load_encoded(*manifest, *workers, model);
      const auto task = make_task(enc, enc, dir);
      const auto rep = retrieve(task, modes.front(), {10, *workers});
      std::ofstream os(*out_path);
      if (!os) throw IoError("cannot open " + *out_path);
      os << "query\tpositive";
      for (int r = 1; r <= 10; ++r) os << "\ttop" << r;
      os << '\n';
      for (std::size_t q = 0; q < task.queries.size(); ++q) {
        os << task.queries[q].id << '\t' << task.candidates[task.positives[q]].id;
        for (auto j : rep.ranked[q]) os << '\t' << task.candidates[j].id;
        os << '\n';
      }
      if (!os) throw IoError("write failed: " + *out_path);
      out << kReportHeader << '\n' << report_tsv_row(rep) << '\n';
    };
  });
}

void setup_bench(CLI::App& app, std::ostream& out, std::function<void()>& action) {
  auto* cmd = app.add_subcommand("bench", "recall and wall time of retrieval modes, both directions");
  auto ckpt = std::make_shared<std::string>();
  auto queries = std::make_shared<std::string>();
  auto candidates = std::make_shared<std::string>();
  auto modes = std::make_shared<std::string>("agg,seq,hybrid:100,hybrid:10");
  auto workers = std::make_shared<int>(default_workers());
  auto max_queries = std::make_shared<std::size_t>(1000);
  auto out_path = std::make_shared<std::string>();
  auto m = std::make_shared<MetricFlags>();
  cmd->add_option("--ckpt", *ckpt, "checkpoint (omit to use features as latents)");
  cmd->add_option("--queries", *queries, "manifest providing the queries")->required();
  cmd->add_option("--candidates", *candidates, "manifest providing the candidates")->required();
  cmd->add_option("--modes", *modes, "comma list of agg, seq, hybrid:k");
  cmd->add_option("--workers", *workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--max-queries", *max_queries, "queries per direction");
  cmd->add_option("--out", *out_path, "report TSV")->required();
  add_metric_flags(cmd, *m, false);

  cmd->callback([=, &action, &out] {
    action = [=, &out] {
      std::optional<Model> model;
      if (!ckpt->empty()) model = load_checkpoint(*ckpt);
      const auto kind = validating([&] { return seq_kind(*m, model); });
      const auto mode_list = validating([&] { return parse_modes(*modes, 100, kind); });
      log_config("bench", {{"ckpt", ckpt->empty() ? std::string("<none>") : *ckpt},
                           {"queries", *queries},
                           {"candidates", *candidates},
                           {"modes", *modes},
                           {"seq_metric", to_string(kind)},
                           {"max_queries", str(*max_queries)},
                           {"workers", str(*workers)},
                           {"out", *out_path}});
      const auto qset = load_encoded(*queries, *workers, model);
      const auto cset = load_encoded(*candidates, *workers, model);
      const std::vector<Direction> dirs{Direction::A2V, Direction::V2A};
      const auto reports = bench(qset, cset, mode_list, dirs, *max_queries, {10, *workers});
      write_report_tsv(reports, *out_path);
      out << format_table(reports);
    };
  });
}

void setup_gradcheck(CLI::App& app, std::ostream& out, std::function<void()>& action, int& exit_code) {
  auto* cmd = app.add_subcommand("gradcheck", "finite-difference check of every analytic gradient");
  auto target = std::make_shared<std::string>("all");
  auto threshold = std::make_shared<double>(1e-4);
  auto seed = std::make_shared<std::uint64_t>(12345);
  auto list = std::make_shared<bool>(false);
  cmd->add_option("--target", *target, "target name or 'all'");
  cmd->add_option("--threshold", *threshold, "max relative error (pipeline targets use >= 1e-3)");
  cmd->add_option("--seed", *seed, "instance seed");
  cmd->add_flag("--list", *list, "print target names and exit");
  cmd->callback([=, &action, &out, &exit_code] {
    action = [=, &exit_code, &out] {
      if (*list) {
        for (const auto& n : gradcheck_targets()) out << n << '\n';
        return;
      }
      validating([&] {
        if (!(*threshold > 0.0)) throw InvalidArgument("threshold must be > 0");
        const auto names = gradcheck_targets();
        if (*target != "all" && std::find(names.begin(), names.end(), *target) == names.end())
          throw InvalidArgument("unknown gradcheck target '" + *target + "'");
        return 0;
      });
      log_config("gradcheck", {{"target", *target}, {"threshold", str(*threshold)}, {"seed", str(*seed)}});
      bool ok = true;
      for (const auto& r : run_gradchecks(*target, *threshold, *seed)) {
        out << format_report(r) << '\n';
        ok = ok && r.pass;
      }
      if (!ok) exit_code = kExitRuntime;
    };
  });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out) {
  CLI::App app{"scav: sequential contrastive audio-visual learning toolkit"};
  app.require_subcommand(1);
  app.allow_extras(false);
  std::function<void()> action;
  int exit_code = kExitOk;
  setup_gen_synthetic(app, out, action);
  setup_dist(app, out, action);
  setup_pairwise(app, out, action);
  setup_train(app, out, action);
  setup_retrieve(app, out, action);
  setup_bench(app, out, action);
  setup_gradcheck(app, out, action, exit_code);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  try {
    if (action) action();
  } catch (const ValidationFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return exit_code;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout);
}

}  // namespace scav::cli
