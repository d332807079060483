#include "scav/seqdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "binary_io.hpp"
#include "scav/kernels.hpp"

namespace scav {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSeqfMagic = "SEQF";
constexpr std::uint16_t kSeqfVersion = 1;

// Unit-variance smoothed random walk: cumulative sum of N(0,1) steps, row t
// divided by sqrt(t + 1).
Matrix smoothed_walk(int len, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(len, dim);
  RowVector acc = RowVector::Zero(dim);
  for (int t = 0; t < len; ++t) {
    for (int d = 0; d < dim; ++d) acc(d) += normal(rng);
    z.row(t) = acc / std::sqrt(static_cast<double>(t + 1));
  }
  return z;
}

Matrix random_projection(int in, int out, bool identity, std::mt19937_64& rng) {
  if (identity) return Matrix::Identity(in, out);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
  Matrix p(in, out);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = normal(rng);
  return p;
}

FeatureSequence project(std::string id, const Matrix& latent, int len, const Matrix& proj,
                        double noise_std, std::mt19937_64& rng) {
  Matrix feats = linear_interp(latent, len) * proj;
  if (noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_std);
    for (Eigen::Index i = 0; i < feats.size(); ++i) feats.data()[i] += normal(rng);
  }
  return FeatureSequence{std::move(id), feats.cast<float>()};
}

std::string pair_id(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "pair_%05d", i);
  return buf;
}

}  // namespace

namespace detail {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

void validate(const FeatureSequence& seq) {
  if (seq.id.empty()) throw InvalidArgument("sequence id must be non-empty");
  if (seq.data.rows() < 1 || seq.data.cols() < 1)
    throw InvalidArgument("sequence '" + seq.id + "' must have T >= 1 and c >= 1");
  if (!seq.data.allFinite()) throw InvalidArgument("non-finite data in '" + seq.id + "'");
}

std::string encode_seqf(const FeatureSequence& seq) {
  validate(seq);
  if (seq.id.size() > std::numeric_limits<std::uint16_t>::max())
    throw InvalidArgument("sequence id too long");
  detail::ByteWriter w;
  w.bytes(kSeqfMagic);
  w.u16(kSeqfVersion);
  w.u16(static_cast<std::uint16_t>(seq.id.size()));
  w.bytes(seq.id);
  w.u32(static_cast<std::uint32_t>(seq.data.rows()));
  w.u32(static_cast<std::uint32_t>(seq.data.cols()));
  w.raw(seq.data.data(), static_cast<std::size_t>(seq.data.size()) * sizeof(float));
  return w.str();
}

FeatureSequence decode_seqf(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < kSeqfMagic.size() || r.bytes(kSeqfMagic.size()) != kSeqfMagic)
    throw FormatError("bad magic");
  const auto version = r.u16();
  if (version != kSeqfVersion)
    throw FormatError("unsupported SEQF version " + std::to_string(version));
  const auto id_len = r.u16();
  FeatureSequence seq;
  seq.id = std::string(r.bytes(id_len));
  const std::uint64_t rows = r.u32();
  const std::uint64_t cols = r.u32();
  if (rows == 0 || cols == 0) throw FormatError("zero dimension");
  const std::uint64_t count = rows * cols;
  if (count > std::numeric_limits<std::uint32_t>::max() ||
      count > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max()) / 4)
    throw FormatError("dimension overflow");
  const std::size_t payload = static_cast<std::size_t>(count) * sizeof(float);
  if (r.remaining() < payload) throw FormatError("truncated");
  auto raw = r.bytes(payload);
  if (r.remaining() != 0) throw FormatError("trailing bytes after payload");
  seq.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::memcpy(seq.data.data(), raw.data(), payload);
  if (!seq.data.allFinite()) throw FormatError("non-finite data");
  if (seq.id.empty()) throw FormatError("empty id");
  return seq;
}

void save_seqf(const FeatureSequence& seq, const fs::path& path) {
  detail::write_file(path, encode_seqf(seq));
}

FeatureSequence load_seqf(const fs::path& path) {
  try {
    return decode_seqf(detail::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

PairManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  PairManifest manifest;
  std::unordered_set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3 || fields[0].empty())
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 3 tab-separated fields");
    if (!seen.insert(fields[0]).second)
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": duplicate id '" +
                        fields[0] + "'");
    auto resolve = [&](const std::string& p) {
      fs::path q(p);
      return q.is_absolute() ? q : base / q;
    };
    manifest.records.push_back({fields[0], resolve(fields[1]), resolve(fields[2])});
  }
  return manifest;
}

void save_manifest(const PairManifest& manifest, const fs::path& path) {
  std::string out;
  for (const auto& r : manifest.records)
    out += r.id + '\t' + r.video_path.generic_string() + '\t' + r.audio_path.generic_string() + '\n';
  detail::write_file(path, out);
}

PairedDataset load_pairs(const PairManifest& manifest) {
  PairedDataset data;
  data.videos.reserve(manifest.size());
  data.audios.reserve(manifest.size());
  for (const auto& r : manifest.records) {
    for (const auto* p : {&r.video_path, &r.audio_path})
      if (!fs::exists(*p)) throw IoError("missing file for '" + r.id + "': " + p->string());
    auto v = load_seqf(r.video_path);
    auto a = load_seqf(r.audio_path);
    // The manifest id is authoritative for pairing.
    v.id = r.id;
    a.id = r.id;
    data.videos.push_back(std::move(v));
    data.audios.push_back(std::move(a));
  }
  return data;
}

void validate(const SynthConfig& cfg) {
  if (cfg.num_pairs < 1) throw InvalidArgument("num_pairs must be >= 1");
  if (cfg.id_offset < 0) throw InvalidArgument("id_offset must be >= 0");
  if (cfg.dim_v < 1 || cfg.dim_a < 1 || cfg.latent_dim < 1)
    throw InvalidArgument("dimensions must be >= 1");
  if (cfg.len_v < 2 || cfg.len_a < 2) throw InvalidArgument("lengths must be >= 2");
  if (!(cfg.noise_std >= 0.0)) throw InvalidArgument("noise_std must be >= 0");
  if (!(cfg.distractor_correlation >= 0.0 && cfg.distractor_correlation < 1.0))
    throw InvalidArgument("distractor_correlation must be in [0, 1)");
  if (cfg.identity_projections && (cfg.dim_v != cfg.latent_dim || cfg.dim_a != cfg.latent_dim))
    throw InvalidArgument("identity projections need dim_v == dim_a == latent_dim");
}

PairedDataset synthesize(const SynthConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  const Matrix proj_v = random_projection(cfg.latent_dim, cfg.dim_v, cfg.identity_projections, rng);
  const Matrix proj_a = random_projection(cfg.latent_dim, cfg.dim_a, cfg.identity_projections, rng);
  const int len = std::max(cfg.len_v, cfg.len_a);
  const double rho = cfg.distractor_correlation;
  Matrix shared;
  if (rho > 0.0) shared = smoothed_walk(len, cfg.latent_dim, rng);

  PairedDataset data;
  data.videos.reserve(static_cast<std::size_t>(cfg.num_pairs));
  data.audios.reserve(static_cast<std::size_t>(cfg.num_pairs));
  for (int i = 0; i < cfg.num_pairs; ++i) {
    // Each pair draws from its own stream keyed by its global index, so sets
    // generated with different id offsets are disjoint slices of one dataset.
    const auto index = static_cast<std::uint64_t>(cfg.id_offset + i);
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 pair_rng(seq);
    Matrix z = smoothed_walk(len, cfg.latent_dim, pair_rng);
    if (rho > 0.0) z = std::sqrt(1.0 - rho * rho) * z + rho * shared;
    const std::string id = pair_id(cfg.id_offset + i);
    data.videos.push_back(project(id, z, cfg.len_v, proj_v, cfg.noise_std, pair_rng));
    data.audios.push_back(project(id, z, cfg.len_a, proj_a, cfg.noise_std, pair_rng));
  }
  return data;
}

PairManifest gen_synthetic(const SynthConfig& cfg, const fs::path& out_dir) {
  auto data = synthesize(cfg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir.string());
  PairManifest manifest;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& id = data.videos[i].id;
    PairRecord rec{id, fs::path(id + ".video.seqf"), fs::path(id + ".audio.seqf")};
    save_seqf(data.videos[i], out_dir / rec.video_path);
    save_seqf(data.audios[i], out_dir / rec.audio_path);
    manifest.records.push_back(std::move(rec));
  }
  save_manifest(manifest, out_dir / "manifest.tsv");
  return manifest;
}

std::vector<std::vector<std::size_t>> make_batch_indices(std::size_t n, int batch_size,
                                                         std::uint64_t seed, bool shuffle) {
  if (batch_size < 2) throw InvalidArgument("batch size must be >= 2");
  const auto b = static_cast<std::size_t>(batch_size);
  if (b > n)
    throw InvalidArgument("batch size " + std::to_string(b) + " exceeds dataset size " +
                          std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start + b <= n; start += b)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(start + b));
  return batches;
}

std::vector<PairedBatch> make_batches(const PairedDataset& data, int batch_size,
                                      std::uint64_t seed, bool shuffle) {
  std::vector<PairedBatch> out;
  for (const auto& idx : make_batch_indices(data.size(), batch_size, seed, shuffle)) {
    PairedBatch batch;
    for (auto i : idx) {
      batch.videos.push_back(data.videos[i]);
      batch.audios.push_back(data.audios[i]);
    }
    out.push_back(std::move(batch));
  }
  return out;
}

}  // namespace scav
