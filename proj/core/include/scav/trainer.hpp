#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scav/encoder.hpp"
#include "scav/kernels.hpp"
#include "scav/objective.hpp"
#include "scav/retrieval.hpp"
#include "scav/seqdata.hpp"

namespace scav {

enum class LossKind { Cav, Scav, Multi };

std::string to_string(LossKind k);
LossKind parse_loss_kind(const std::string& s);

struct TrainConfig {
  LossKind loss = LossKind::Scav;
  DistanceKind distance = EuclInterp{Direction::V2A, Stage::Pre};
  int batch_size = 32;
  int steps = 1000;
  double base_lr = 7e-4;
  int warmup_steps = 100;
  double beta1 = 0.95;
  double beta2 = 0.98;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  double tau_init = 0.07;
  double lambda_init = 1.0;
  bool normalize_distances = true;
  double multitask_weight = 0.5;
  int hidden_dim = 64;
  int latent_dim = 16;
  int max_len = 0;  // 0: longest sequence in the training set
  int workers = 1;
};

void validate(const TrainConfig& cfg);

struct Model {
  TrainConfig config;
  EncoderParams encoder;
  Temperature tau;
  Temperature lambda;
};

Model init_model(const TrainConfig& cfg, int video_dim, int audio_dim, int max_len);

/// Raw features as the encoder sees them: under the Pre stage the sequence
/// named by the interpolation direction is resampled to its partner's length.
Matrix prepare_input(const Model& model, const Matrix& raw, Modality modality, int partner_len);

struct ModelGrads {
  EncoderParams encoder;
  double log_tau = 0.0;
  double log_lambda = 0.0;
};

struct BatchEval {
  double loss = 0.0;
  ModelGrads grads;  // empty encoder tensors unless requested
};

/// Full forward (and optionally backward) pass of the configured loss on one
/// paired batch of raw features.
BatchEval batch_objective(const Model& model, std::span<const Matrix> raw_videos,
                          std::span<const Matrix> raw_audios, bool with_grad);

/// Encodes every pair with the model (applying the Pre-stage resampling).
EncodedPairs encode_pairs(const Model& model, const PairedDataset& data, int workers = 1);

/// Features used as-is, for data that is already in latent space.
EncodedPairs as_encoded(const PairedDataset& data);

/// Distance used by sequence retrieval for this model: the training distance
/// for SCAV/multitask, interpolated Euclidean for CAV.
DistanceKind retrieval_distance(const Model& model);

struct EvalMetrics {
  double agg_a2v = 0.0;
  double agg_v2a = 0.0;
  double seq_a2v = 0.0;
  double seq_v2a = 0.0;
};

EvalMetrics evaluate(const Model& model, const PairedDataset& data, int workers = 1);

struct TrainReport {
  std::vector<double> losses;
  Model model;
  double elapsed_seconds = 0.0;
  std::optional<EvalMetrics> eval;
};

using StepCallback = std::function<void(int step, double loss, const Model&)>;

/// Deterministic for a fixed config; throws NumericError on a non-finite loss.
TrainReport train(const PairedDataset& data, const TrainConfig& cfg,
                  const PairedDataset* validation = nullptr, const StepCallback& on_step = {});

// Checkpoint: "SCKP" | u16 version | u32 header_len | JSON header |
// u32 tensor count | per tensor: u16 name_len | name | u32 rows | u32 cols | f32 data
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

std::string config_json(const TrainConfig& cfg);

}  // namespace scav
