#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scav/kernels.hpp"
#include "scav/types.hpp"

namespace scav {

struct EncodedSequence {
  std::string id;
  Matrix data;  // T x c latent sequence
};

/// videos[i] pairs with audios[i].
struct EncodedPairs {
  std::vector<EncodedSequence> videos;
  std::vector<EncodedSequence> audios;

  std::size_t size() const { return videos.size(); }
};

struct Agg {};
struct Seq {
  DistanceKind kind = EuclInterp{};
};
struct Hybrid {
  int k = 100;
  DistanceKind kind = EuclInterp{};
};
using RetrievalMode = std::variant<Agg, Seq, Hybrid>;

std::string to_string(const RetrievalMode& mode);

/// Top-`depth` candidate indices per query, best first.
using Rankings = std::vector<std::vector<std::size_t>>;

// Candidates with equal scores are ordered by ascending id.

Rankings agg_retrieve(std::span<const EncodedSequence> queries,
                      std::span<const EncodedSequence> candidates, int depth, int workers = 1);

/// Ascending raw sequential distance. The video-role sequence is always the
/// first kernel argument, so `query_modality` fixes the argument order.
Rankings seq_retrieve(std::span<const EncodedSequence> queries,
                      std::span<const EncodedSequence> candidates, const DistanceKind& kind,
                      Modality query_modality, int depth, int workers = 1);

struct PhaseTimings {
  double preselect_s = 0.0;
  double rerank_s = 0.0;
};

/// Aggregation pre-selection of k candidates, then sequence re-ranking of
/// that pool. Ranks past k keep the aggregation order.
Rankings hybrid_retrieve(std::span<const EncodedSequence> queries,
                         std::span<const EncodedSequence> candidates, int k,
                         const DistanceKind& kind, Modality query_modality, int depth,
                         int workers = 1, PhaseTimings* timings = nullptr);

/// Fraction of queries whose positive candidate index is within the top r.
double recall_at(const Rankings& rankings, std::span<const std::size_t> positives, int r,
                 std::size_t num_candidates);

/// Queries of one modality against candidates of the other; positives[i] is
/// the index of query i's counterpart among the candidates.
struct RetrievalTask {
  Direction direction = Direction::A2V;
  std::vector<EncodedSequence> queries;
  std::vector<EncodedSequence> candidates;
  std::vector<std::size_t> positives;

  Modality query_modality() const {
    return direction == Direction::A2V ? Modality::Audio : Modality::Video;
  }
};

/// A2V: audio queries from `query_set`, video candidates from `candidate_set`
/// (V2A swaps the modalities). Positives are matched by id; at most
/// `max_queries` queries are kept, in order.
RetrievalTask make_task(const EncodedPairs& query_set, const EncodedPairs& candidate_set,
                        Direction direction,
                        std::size_t max_queries = std::numeric_limits<std::size_t>::max());

struct RetrievalOptions {
  int depth = 10;
  int workers = 1;
};

struct RetrievalReport {
  std::string mode;
  Direction direction = Direction::A2V;
  Rankings ranked;
  double recall1 = 0.0;
  double recall5 = 0.0;
  double recall10 = 0.0;
  double preselect_s = 0.0;
  double rerank_s = 0.0;
  double total_s = 0.0;
};

RetrievalReport retrieve(const RetrievalTask& task, const RetrievalMode& mode,
                         const RetrievalOptions& options = {});

inline constexpr const char* kReportHeader =
    "mode\tdirection\trecall@1\trecall@5\trecall@10\tpreselect_s\trerank_s\ttotal_s";

std::string report_tsv_row(const RetrievalReport& report);

/// Runs every mode in every direction, each after an untimed warm-up pass
/// on a few queries.
std::vector<RetrievalReport> bench(const EncodedPairs& query_set, const EncodedPairs& candidate_set,
                                   std::span<const RetrievalMode> modes,
                                   std::span<const Direction> directions, std::size_t max_queries,
                                   const RetrievalOptions& options = {});

std::string format_table(std::span<const RetrievalReport> reports);
void write_report_tsv(std::span<const RetrievalReport> reports, const std::filesystem::path& path);

}  // namespace scav
