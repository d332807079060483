#include "scav/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "scav/optimizer.hpp"
#include "scav/parallel.hpp"

namespace scav {

namespace {

using nlohmann::json;

constexpr std::string_view kCkptMagic = "SCKP";
constexpr std::uint16_t kCkptVersion = 1;

json distance_to_json(const DistanceKind& kind) {
  if (const auto* e = std::get_if<EuclInterp>(&kind))
    return {{"type", "eucl"}, {"direction", to_string(e->direction)}, {"stage", to_string(e->stage)}};
  if (const auto* s = std::get_if<SoftDtw>(&kind)) return {{"type", "sdtw"}, {"gamma", s->gamma}};
  if (std::holds_alternative<HardDtw>(kind)) return {{"type", "dtw"}};
  const auto& w = std::get<Wasserstein>(kind);
  return {{"type", "wass"},
          {"epsilon", w.epsilon},
          {"iters", w.iters},
          {"pos_weight", w.pos_weight},
          {"tolerance", w.tolerance}};
}

DistanceKind distance_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "eucl")
    return EuclInterp{parse_direction(j.at("direction").get<std::string>()),
                      parse_stage(j.at("stage").get<std::string>())};
  if (type == "sdtw") return SoftDtw{j.at("gamma").get<double>()};
  if (type == "dtw") return HardDtw{};
  if (type == "wass") {
    Wasserstein w;
    w.epsilon = j.at("epsilon").get<double>();
    w.iters = j.at("iters").get<int>();
    w.pos_weight = j.at("pos_weight").get<double>();
    w.tolerance = j.value("tolerance", w.tolerance);
    return w;
  }
  throw FormatError("unknown distance type '" + type + "'");
}

json config_to_json(const TrainConfig& c) {
  return {{"loss", to_string(c.loss)},
          {"distance", distance_to_json(c.distance)},
          {"batch_size", c.batch_size},
          {"steps", c.steps},
          {"base_lr", c.base_lr},
          {"warmup_steps", c.warmup_steps},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"weight_decay", c.weight_decay},
          {"seed", c.seed},
          {"tau_init", c.tau_init},
          {"lambda_init", c.lambda_init},
          {"normalize_distances", c.normalize_distances},
          {"multitask_weight", c.multitask_weight},
          {"hidden_dim", c.hidden_dim},
          {"latent_dim", c.latent_dim},
          {"max_len", c.max_len}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.loss = parse_loss_kind(j.at("loss").get<std::string>());
  c.distance = distance_from_json(j.at("distance"));
  c.batch_size = j.at("batch_size").get<int>();
  c.steps = j.at("steps").get<int>();
  c.base_lr = j.at("base_lr").get<double>();
  c.warmup_steps = j.at("warmup_steps").get<int>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.tau_init = j.at("tau_init").get<double>();
  c.lambda_init = j.at("lambda_init").get<double>();
  c.normalize_distances = j.at("normalize_distances").get<bool>();
  c.multitask_weight = j.at("multitask_weight").get<double>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.max_len = j.at("max_len").get<int>();
  return c;
}

bool uses_scav(LossKind k) { return k != LossKind::Cav; }
bool uses_cav(LossKind k) { return k != LossKind::Scav; }

std::vector<Matrix> to_double(const std::vector<FeatureSequence>& seqs) {
  std::vector<Matrix> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(s.to_double());
  return out;
}

}  // namespace

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::Cav:
      return "cav";
    case LossKind::Scav:
      return "scav";
    case LossKind::Multi:
      return "multi";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "cav") return LossKind::Cav;
  if (s == "scav") return LossKind::Scav;
  if (s == "multi") return LossKind::Multi;
  throw InvalidArgument("unknown loss '" + s + "' (expected cav|scav|multi)");
}

void validate(const TrainConfig& cfg) {
  validate(cfg.distance);
  if (cfg.steps < 1) throw InvalidArgument("steps must be >= 1");
  if (cfg.batch_size < 2) throw InvalidArgument("batch size must be >= 2");
  if (!(cfg.base_lr > 0.0)) throw InvalidArgument("base learning rate must be > 0");
  if (cfg.warmup_steps < 0) throw InvalidArgument("warmup steps must be >= 0");
  if (!(cfg.tau_init > 0.0) || !(cfg.lambda_init > 0.0))
    throw InvalidArgument("temperature inits must be > 0");
  if (!(cfg.multitask_weight >= 0.0 && cfg.multitask_weight <= 1.0))
    throw InvalidArgument("multitask weight must be in [0, 1]");
  if (uses_scav(cfg.loss) && !is_differentiable(cfg.distance))
    throw InvalidArgument("training needs a differentiable distance (eucl, sdtw or wass)");
  if (cfg.hidden_dim < 1 || cfg.latent_dim < 1) throw InvalidArgument("encoder dims must be >= 1");
}

Model init_model(const TrainConfig& cfg, int video_dim, int audio_dim, int max_len) {
  Model m;
  m.config = cfg;
  m.config.max_len = max_len;
  m.encoder = init_encoder({video_dim, audio_dim, cfg.hidden_dim, cfg.latent_dim, max_len}, cfg.seed);
  m.tau = Temperature::from_value(cfg.tau_init);
  m.lambda = Temperature::from_value(cfg.lambda_init);
  return m;
}

Matrix prepare_input(const Model& model, const Matrix& raw, Modality modality, int partner_len) {
  const auto* e = std::get_if<EuclInterp>(&model.config.distance);
  if (!e || e->stage != Stage::Pre) return raw;
  const bool resample_video = e->direction == Direction::V2A;
  if ((modality == Modality::Video) == resample_video) return linear_interp(raw, partner_len);
  return raw;
}

BatchEval batch_objective(const Model& model, std::span<const Matrix> raw_videos,
                          std::span<const Matrix> raw_audios, bool with_grad) {
  if (raw_videos.size() != raw_audios.size()) throw InvalidArgument("batch modalities differ in size");
  const std::size_t b = raw_videos.size();
  if (b < 2) throw InvalidArgument("batch size must be >= 2");
  const auto& cfg = model.config;

  std::vector<Matrix> in_v(b), in_a(b), h_v(b), h_a(b);
  std::vector<BranchCache> cache_v(b), cache_a(b);
  for (std::size_t i = 0; i < b; ++i) {
    in_v[i] = prepare_input(model, raw_videos[i], Modality::Video,
                            static_cast<int>(raw_audios[i].rows()));
    in_a[i] = prepare_input(model, raw_audios[i], Modality::Audio,
                            static_cast<int>(raw_videos[i].rows()));
    h_v[i] = encode(model.encoder.video, in_v[i], &cache_v[i]);
    h_a[i] = encode(model.encoder.audio, in_a[i], &cache_a[i]);
  }

  std::optional<LossResult> scav, cav;
  std::vector<KernelGrad> kgrads;
  if (uses_scav(cfg.loss)) {
    Matrix d(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b));
    if (with_grad) kgrads.resize(b * b);
    parallel_for(b, cfg.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = 0; j < b; ++j) {
          const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
          if (with_grad) {
            auto r = distance_grad(h_v[i], h_a[j], cfg.distance);
            d(ii, jj) = r.value;
            kgrads[i * b + j] = std::move(r.grad);
          } else {
            d(ii, jj) = distance(h_v[i], h_a[j], cfg.distance);
          }
        }
    });
    scav = scav_loss(d, model.lambda, cfg.normalize_distances);
  }
  if (uses_cav(cfg.loss)) cav = cav_loss(h_v, h_a, model.tau);

  LossResult loss;
  if (scav && cav)
    loss = multitask_loss(*scav, *cav, cfg.multitask_weight);
  else
    loss = scav ? *scav : *cav;

  BatchEval out;
  out.loss = loss.loss;
  if (!with_grad) return out;

  std::vector<Matrix> g_v(b), g_a(b);
  for (std::size_t i = 0; i < b; ++i) {
    g_v[i] = Matrix::Zero(h_v[i].rows(), h_v[i].cols());
    g_a[i] = Matrix::Zero(h_a[i].rows(), h_a[i].cols());
  }
  if (scav) {
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        const double w = loss.grad_distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        g_v[i] += w * kgrads[i * b + j].grad_x;
        g_a[j] += w * kgrads[i * b + j].grad_y;
      }
  }
  if (cav) {
    for (std::size_t i = 0; i < b; ++i) {
      g_v[i] += loss.grad_videos[i];
      g_a[i] += loss.grad_audios[i];
    }
  }
  out.grads.encoder = zeros_like(model.encoder);
  for (std::size_t i = 0; i < b; ++i) {
    encode_backward(model.encoder.video, in_v[i], g_v[i], out.grads.encoder.video, &cache_v[i]);
    encode_backward(model.encoder.audio, in_a[i], g_a[i], out.grads.encoder.audio, &cache_a[i]);
  }
  out.grads.log_lambda = loss.grad_log_lambda;
  out.grads.log_tau = loss.grad_log_tau;
  return out;
}

EncodedPairs encode_pairs(const Model& model, const PairedDataset& data, int workers) {
  EncodedPairs out;
  out.videos.resize(data.size());
  out.audios.resize(data.size());
  parallel_for(data.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Matrix v = data.videos[i].to_double();
      const Matrix a = data.audios[i].to_double();
      out.videos[i] = {data.videos[i].id,
                       encode(model.encoder.video,
                              prepare_input(model, v, Modality::Video, static_cast<int>(a.rows())))};
      out.audios[i] = {data.audios[i].id,
                       encode(model.encoder.audio,
                              prepare_input(model, a, Modality::Audio, static_cast<int>(v.rows())))};
    }
  });
  return out;
}

EncodedPairs as_encoded(const PairedDataset& data) {
  EncodedPairs out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.videos.push_back({data.videos[i].id, data.videos[i].to_double()});
    out.audios.push_back({data.audios[i].id, data.audios[i].to_double()});
  }
  return out;
}

DistanceKind retrieval_distance(const Model& model) {
  if (model.config.loss == LossKind::Cav) return EuclInterp{};
  return model.config.distance;
}

EvalMetrics evaluate(const Model& model, const PairedDataset& data, int workers) {
  const auto enc = encode_pairs(model, data, workers);
  const RetrievalOptions opts{1, workers};
  const RetrievalMode seq = Seq{retrieval_distance(model)};
  EvalMetrics m;
  const auto a2v = make_task(enc, enc, Direction::A2V);
  const auto v2a = make_task(enc, enc, Direction::V2A);
  m.agg_a2v = retrieve(a2v, Agg{}, opts).recall1;
  m.agg_v2a = retrieve(v2a, Agg{}, opts).recall1;
  m.seq_a2v = retrieve(a2v, seq, opts).recall1;
  m.seq_v2a = retrieve(v2a, seq, opts).recall1;
  return m;
}

TrainReport train(const PairedDataset& data, const TrainConfig& cfg,
                  const PairedDataset* validation, const StepCallback& on_step) {
  validate(cfg);
  if (data.size() < static_cast<std::size_t>(cfg.batch_size))
    throw InvalidArgument("dataset has " + std::to_string(data.size()) +
                          " pairs, fewer than the batch size " + std::to_string(cfg.batch_size));
  const auto start = std::chrono::steady_clock::now();

  const auto videos = to_double(data.videos);
  const auto audios = to_double(data.audios);
  int max_len = cfg.max_len;
  if (max_len <= 0) {
    for (const auto& v : videos) max_len = std::max(max_len, static_cast<int>(v.rows()));
    for (const auto& a : audios) max_len = std::max(max_len, static_cast<int>(a.rows()));
  }
  TrainReport report;
  report.model = init_model(cfg, static_cast<int>(videos.front().cols()),
                            static_cast<int>(audios.front().cols()), max_len);
  Model& model = report.model;

  Matrix log_tau(1, 1), log_lambda(1, 1), g_tau(1, 1), g_lambda(1, 1);
  log_tau(0, 0) = model.tau.log_value;
  log_lambda(0, 0) = model.lambda.log_value;
  ModelGrads grads;
  grads.encoder = zeros_like(model.encoder);

  std::vector<ParamRef> params;
  {
    std::vector<Matrix*> values, gvals;
    model.encoder.for_each([&](const std::string&, Matrix& m) { values.push_back(&m); });
    grads.encoder.for_each([&](const std::string&, Matrix& m) { gvals.push_back(&m); });
    for (std::size_t k = 0; k < values.size(); ++k) params.push_back({values[k], gvals[k], true});
    params.push_back({&log_tau, &g_tau, false});
    params.push_back({&log_lambda, &g_lambda, false});
  }
  AdamState state;
  const AdamConfig adam{cfg.beta1, cfg.beta2, 1e-8, cfg.weight_decay};
  const LrSchedule schedule{cfg.base_lr, cfg.warmup_steps, cfg.steps};

  std::vector<std::vector<std::size_t>> batches;
  std::vector<Matrix> bv, ba;
  for (int step = 1; step <= cfg.steps; ++step) {
    const auto per_epoch = data.size() / static_cast<std::size_t>(cfg.batch_size);
    const auto pos = static_cast<std::size_t>(step - 1) % per_epoch;
    if (pos == 0) {
      const auto epoch = static_cast<std::uint64_t>(step - 1) / per_epoch;
      batches = make_batch_indices(data.size(), cfg.batch_size,
                                   cfg.seed * 0x9E3779B97F4A7C15ull + epoch + 1, true);
    }
    bv.clear();
    ba.clear();
    for (auto i : batches[pos]) {
      bv.push_back(videos[i]);
      ba.push_back(audios[i]);
    }

    auto eval = batch_objective(model, bv, ba, true);
    if (!std::isfinite(eval.loss)) {
      std::ostringstream os;
      os << "non-finite loss at step " << step << " (tau=" << model.tau.value()
         << ", lambda=" << model.lambda.value() << ")";
      throw NumericError(os.str());
    }
    report.losses.push_back(eval.loss);

    // Copy gradients into the buffers the optimizer refs point at.
    grads.encoder = std::move(eval.grads.encoder);
    g_tau(0, 0) = eval.grads.log_tau;
    g_lambda(0, 0) = eval.grads.log_lambda;
    adam_step(params, state, step, cosine_lr(step, schedule), adam);
    model.tau.log_value = log_tau(0, 0);
    model.lambda.log_value = log_lambda(0, 0);
    if (!std::isfinite(model.tau.value()) || !std::isfinite(model.lambda.value()))
      throw NumericError("temperature diverged at step " + std::to_string(step));
    if (on_step) on_step(step, eval.loss, model);
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (validation) report.eval = evaluate(model, *validation, cfg.workers);
  return report;
}

std::string config_json(const TrainConfig& cfg) { return config_to_json(cfg).dump(); }

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.bytes(kCkptMagic);
  w.u16(kCkptVersion);
  const std::string header = config_to_json(model.config).dump(2);
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.bytes(header);

  std::vector<std::pair<std::string, Matrix>> tensors;
  model.encoder.for_each([&](const std::string& n, const Matrix& m) { tensors.emplace_back(n, m); });
  tensors.emplace_back("log_tau", Matrix::Constant(1, 1, model.tau.log_value));
  tensors.emplace_back("log_lambda", Matrix::Constant(1, 1, model.lambda.log_value));
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    if (!m.allFinite()) throw NumericError("non-finite parameter '" + name + "'");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    const MatrixF f = m.cast<float>();
    w.raw(f.data(), static_cast<std::size_t>(f.size()) * sizeof(float));
  }
  detail::write_file(path, w.str());
}

Model load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader r(bytes);
  if (r.remaining() < kCkptMagic.size() || r.bytes(kCkptMagic.size()) != kCkptMagic)
    throw FormatError(path.string() + ": bad magic");
  if (r.u16() != kCkptVersion) throw FormatError(path.string() + ": unsupported checkpoint version");
  const auto header_len = r.u32();
  Model model;
  try {
    model.config = config_from_json(json::parse(r.bytes(header_len)));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  const auto count = r.u32();
  std::vector<std::pair<std::string, Matrix>> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name(r.bytes(r.u16()));
    const std::uint64_t rows = r.u32(), cols = r.u32();
    if (rows * cols > r.remaining() / sizeof(float)) throw FormatError(path.string() + ": truncated");
    MatrixF f(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const auto raw = r.bytes(static_cast<std::size_t>(rows * cols) * sizeof(float));
    std::memcpy(f.data(), raw.data(), raw.size());
    tensors.emplace_back(std::move(name), f.cast<double>());
  }
  auto take = [&](const std::string& name) -> Matrix {
    for (auto& [n, m] : tensors)
      if (n == name) return m;
    throw FormatError(path.string() + ": missing tensor '" + name + "'");
  };
  model.encoder.for_each([&](const std::string& n, Matrix& m) { m = take(n); });
  model.tau.log_value = take("log_tau")(0, 0);
  model.lambda.log_value = take("log_lambda")(0, 0);
  return model;
}

}  // namespace scav
