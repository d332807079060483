#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scav/types.hpp"

namespace scav {

/// One modality's time-major feature matrix (T frames x c channels).
/// Stored as 32-bit floats; kernels work on the 64-bit promotion.
struct FeatureSequence {
  std::string id;
  MatrixF data;

  int length() const { return static_cast<int>(data.rows()); }
  int dim() const { return static_cast<int>(data.cols()); }
  Matrix to_double() const { return data.cast<double>(); }

  bool operator==(const FeatureSequence& other) const {
    return id == other.id && data.rows() == other.data.rows() &&
           data.cols() == other.data.cols() && data == other.data;
  }
};

/// Throws InvalidArgument unless T >= 1, c >= 1, the id is non-empty and
/// every entry is finite.
void validate(const FeatureSequence& seq);

// SEQF: "SEQF" | u16 version=1 | u16 id_len | id | u32 T | u32 c | T*c f32 (LE)
std::string encode_seqf(const FeatureSequence& seq);
FeatureSequence decode_seqf(std::string_view bytes);
void save_seqf(const FeatureSequence& seq, const std::filesystem::path& path);
FeatureSequence load_seqf(const std::filesystem::path& path);

struct PairRecord {
  std::string id;
  std::filesystem::path video_path;
  std::filesystem::path audio_path;
};

struct PairManifest {
  std::vector<PairRecord> records;
  std::size_t size() const { return records.size(); }
};

/// Reads `id<TAB>video<TAB>audio` lines. Relative paths resolve against the
/// manifest's directory; `#` lines and blank lines are skipped.
PairManifest load_manifest(const std::filesystem::path& path);

/// Writes paths as given (relative paths stay relative).
void save_manifest(const PairManifest& manifest, const std::filesystem::path& path);

/// Manifest records resolved into memory. videos[i] pairs with audios[i].
struct PairedDataset {
  std::vector<FeatureSequence> videos;
  std::vector<FeatureSequence> audios;

  std::size_t size() const { return videos.size(); }
};

PairedDataset load_pairs(const PairManifest& manifest);

struct SynthConfig {
  int num_pairs = 256;
  int dim_v = 16;
  int dim_a = 12;
  int latent_dim = 4;
  int len_v = 24;
  int len_a = 16;
  double noise_std = 0.3;
  std::uint64_t seed = 0;
  double distractor_correlation = 0.0;
  // Uses identity maps instead of random projections; needs dim_v == dim_a == latent_dim.
  bool identity_projections = false;
  // Index of the first pair. Pair i is a pure function of (seed, id_offset + i),
  // so offsets carve disjoint train/test slices out of one generator.
  int id_offset = 0;
};

void validate(const SynthConfig& cfg);

/// Deterministic in-memory generation; ids are `pair_%05d`.
PairedDataset synthesize(const SynthConfig& cfg);

/// synthesize() written to out_dir as SEQF files plus `manifest.tsv`.
PairManifest gen_synthetic(const SynthConfig& cfg, const std::filesystem::path& out_dir);

/// Disjoint index batches covering floor(n/B)*B items; the remainder is dropped.
std::vector<std::vector<std::size_t>> make_batch_indices(std::size_t n, int batch_size,
                                                         std::uint64_t seed, bool shuffle);

struct PairedBatch {
  std::vector<FeatureSequence> videos;
  std::vector<FeatureSequence> audios;

  std::size_t size() const { return videos.size(); }
};

std::vector<PairedBatch> make_batches(const PairedDataset& data, int batch_size,
                                      std::uint64_t seed, bool shuffle);

}  // namespace scav
