#include "scav/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "scav/objective.hpp"
#include "scav/parallel.hpp"

namespace scav {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Position of each candidate in ascending id order.
std::vector<std::size_t> id_ranks(std::span<const EncodedSequence> candidates) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].id < candidates[b].id;
  });
  std::vector<std::size_t> rank(candidates.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

Matrix pooled_unit(std::span<const EncodedSequence> seqs, Eigen::Index dim) {
  Matrix out(static_cast<Eigen::Index>(seqs.size()), dim);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].data.cols() != dim) throw InvalidArgument("embedding dimension mismatch");
    const RowVector p = mean_pool(seqs[i].data);
    const double n = p.norm();
    if (n == 0.0) throw NumericError("zero-norm pooled embedding for '" + seqs[i].id + "'");
    out.row(static_cast<Eigen::Index>(i)) = p / n;
  }
  return out;
}

void check_sets(std::span<const EncodedSequence> queries,
                std::span<const EncodedSequence> candidates, int depth) {
  if (candidates.empty()) throw InvalidArgument("no candidates");
  if (depth < 1) throw InvalidArgument("ranking depth must be >= 1");
  const auto dim = candidates.front().data.cols();
  for (const auto& s : queries)
    if (s.data.cols() != dim) throw InvalidArgument("query '" + s.id + "' has mismatched dim");
}

// Sorts `idx` best-first by (score, id rank) and keeps the first `keep`.
// `ascending` selects distances (true) or similarities (false).
void rank_by(std::vector<std::size_t>& idx, const std::vector<double>& score,
             const std::vector<std::size_t>& rank, std::size_t keep, bool ascending) {
  auto better = [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return ascending ? score[a] < score[b] : score[a] > score[b];
    return rank[a] < rank[b];
  };
  keep = std::min(keep, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), better);
  idx.resize(keep);
}

double role_distance(const Matrix& query, const Matrix& candidate, const DistanceKind& kind,
                     Modality query_modality) {
  return query_modality == Modality::Video ? distance(query, candidate, kind)
                                           : distance(candidate, query, kind);
}

}  // namespace

std::string to_string(const RetrievalMode& mode) {
  if (std::holds_alternative<Agg>(mode)) return "agg";
  if (std::holds_alternative<Seq>(mode)) return "seq";
  return "hybrid:" + std::to_string(std::get<Hybrid>(mode).k);
}

Rankings agg_retrieve(std::span<const EncodedSequence> queries,
                      std::span<const EncodedSequence> candidates, int depth, int workers) {
  check_sets(queries, candidates, depth);
  const auto dim = candidates.front().data.cols();
  const Matrix qn = pooled_unit(queries, dim);
  const Matrix cn = pooled_unit(candidates, dim);
  const auto rank = id_ranks(candidates);
  const auto keep = static_cast<std::size_t>(depth);
  Rankings out(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t begin, std::size_t end) {
    constexpr std::size_t kBlock = 64;
    std::vector<double> score(candidates.size());
    for (std::size_t b0 = begin; b0 < end; b0 += kBlock) {
      const std::size_t nb = std::min(kBlock, end - b0);
      const Matrix sims =
          qn.middleRows(static_cast<Eigen::Index>(b0), static_cast<Eigen::Index>(nb)) *
          cn.transpose();
      for (std::size_t q = 0; q < nb; ++q) {
        for (std::size_t j = 0; j < candidates.size(); ++j)
          score[j] = sims(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j));
        std::vector<std::size_t> idx(candidates.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        rank_by(idx, score, rank, keep, /*ascending=*/false);
        out[b0 + q] = std::move(idx);
      }
    }
  });
  return out;
}

Rankings seq_retrieve(std::span<const EncodedSequence> queries,
                      std::span<const EncodedSequence> candidates, const DistanceKind& kind,
                      Modality query_modality, int depth, int workers) {
  check_sets(queries, candidates, depth);
  validate(kind);
  const auto rank = id_ranks(candidates);
  const auto keep = static_cast<std::size_t>(depth);
  Rankings out(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> dist(candidates.size());
    for (std::size_t q = begin; q < end; ++q) {
      for (std::size_t j = 0; j < candidates.size(); ++j)
        dist[j] = role_distance(queries[q].data, candidates[j].data, kind, query_modality);
      std::vector<std::size_t> idx(candidates.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      rank_by(idx, dist, rank, keep, /*ascending=*/true);
      out[q] = std::move(idx);
    }
  });
  return out;
}

Rankings hybrid_retrieve(std::span<const EncodedSequence> queries,
                         std::span<const EncodedSequence> candidates, int k,
                         const DistanceKind& kind, Modality query_modality, int depth,
                         int workers, PhaseTimings* timings) {
  check_sets(queries, candidates, depth);
  if (k < 1 || static_cast<std::size_t>(k) > candidates.size())
    throw InvalidArgument("hybrid pre-selection k=" + std::to_string(k) + " must be in [1, " +
                          std::to_string(candidates.size()) + "]");
  validate(kind);
  const auto t0 = Clock::now();
  Rankings pre = agg_retrieve(queries, candidates, std::max(k, depth), workers);
  const double preselect = seconds_since(t0);

  const auto t1 = Clock::now();
  const auto rank = id_ranks(candidates);
  const auto pool = static_cast<std::size_t>(k);
  const auto keep = static_cast<std::size_t>(depth);
  Rankings out(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> dist(candidates.size());
    for (std::size_t q = begin; q < end; ++q) {
      const auto& agg = pre[q];
      std::vector<std::size_t> head(agg.begin(), agg.begin() + static_cast<std::ptrdiff_t>(pool));
      for (auto j : head)
        dist[j] = role_distance(queries[q].data, candidates[j].data, kind, query_modality);
      rank_by(head, dist, rank, pool, /*ascending=*/true);
      head.insert(head.end(), agg.begin() + static_cast<std::ptrdiff_t>(pool), agg.end());
      if (head.size() > keep) head.resize(keep);
      out[q] = std::move(head);
    }
  });
  if (timings) {
    timings->preselect_s = preselect;
    timings->rerank_s = seconds_since(t1);
  }
  return out;
}

double recall_at(const Rankings& rankings, std::span<const std::size_t> positives, int r,
                 std::size_t num_candidates) {
  if (rankings.size() != positives.size())
    throw InvalidArgument("one positive per query is required");
  if (r < 1) throw InvalidArgument("recall cut-off must be >= 1");
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (positives[q] >= num_candidates)
      throw InvalidArgument("positive of query " + std::to_string(q) + " missing from candidates");
    const auto& ranked = rankings[q];
    const auto cut = std::min(ranked.size(), static_cast<std::size_t>(r));
    if (cut < static_cast<std::size_t>(r) && ranked.size() < num_candidates)
      throw InvalidArgument("ranking depth is smaller than the recall cut-off");
    if (std::find(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(cut), positives[q]) !=
        ranked.begin() + static_cast<std::ptrdiff_t>(cut))
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

RetrievalTask make_task(const EncodedPairs& query_set, const EncodedPairs& candidate_set,
                        Direction direction, std::size_t max_queries) {
  RetrievalTask task;
  task.direction = direction;
  const bool a2v = direction == Direction::A2V;
  task.candidates = a2v ? candidate_set.videos : candidate_set.audios;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < task.candidates.size(); ++j) {
    if (!index.emplace(task.candidates[j].id, j).second)
      throw InvalidArgument("duplicate candidate id '" + task.candidates[j].id + "'");
  }
  const auto& queries = a2v ? query_set.audios : query_set.videos;
  const std::size_t n = std::min(max_queries, queries.size());
  for (std::size_t q = 0; q < n; ++q) {
    const auto it = index.find(queries[q].id);
    if (it == index.end())
      throw InvalidArgument("positive for query '" + queries[q].id + "' missing from candidates");
    task.queries.push_back(queries[q]);
    task.positives.push_back(it->second);
  }
  return task;
}

RetrievalReport retrieve(const RetrievalTask& task, const RetrievalMode& mode,
                         const RetrievalOptions& options) {
  RetrievalReport rep;
  rep.mode = to_string(mode);
  rep.direction = task.direction;
  const int depth = std::max(options.depth, 10);
  const auto t0 = Clock::now();
  if (std::holds_alternative<Agg>(mode)) {
    rep.ranked = agg_retrieve(task.queries, task.candidates, depth, options.workers);
    rep.preselect_s = seconds_since(t0);
  } else if (const auto* s = std::get_if<Seq>(&mode)) {
    rep.ranked = seq_retrieve(task.queries, task.candidates, s->kind, task.query_modality(), depth,
                              options.workers);
    rep.rerank_s = seconds_since(t0);
  } else {
    const auto& h = std::get<Hybrid>(mode);
    PhaseTimings t;
    rep.ranked = hybrid_retrieve(task.queries, task.candidates, h.k, h.kind, task.query_modality(),
                                 depth, options.workers, &t);
    rep.preselect_s = t.preselect_s;
    rep.rerank_s = t.rerank_s;
  }
  rep.total_s = seconds_since(t0);
  const auto k = task.candidates.size();
  rep.recall1 = recall_at(rep.ranked, task.positives, 1, k);
  rep.recall5 = recall_at(rep.ranked, task.positives, 5, k);
  rep.recall10 = recall_at(rep.ranked, task.positives, 10, k);
  return rep;
}

std::string report_tsv_row(const RetrievalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s\t%s\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f", r.mode.c_str(),
                to_string(r.direction).c_str(), r.recall1, r.recall5, r.recall10, r.preselect_s,
                r.rerank_s, r.total_s);
  return buf;
}

std::vector<RetrievalReport> bench(const EncodedPairs& query_set, const EncodedPairs& candidate_set,
                                   std::span<const RetrievalMode> modes,
                                   std::span<const Direction> directions, std::size_t max_queries,
                                   const RetrievalOptions& options) {
  std::vector<RetrievalReport> out;
  for (auto dir : directions) {
    const auto task = make_task(query_set, candidate_set, dir, max_queries);
    RetrievalTask warm = task;
    const std::size_t n_warm = std::min<std::size_t>(4, warm.queries.size());
    warm.queries.resize(n_warm);
    warm.positives.resize(n_warm);
    for (const auto& mode : modes) {
      retrieve(warm, mode, options);
      out.push_back(retrieve(task, mode, options));
    }
  }
  return out;
}

std::string format_table(std::span<const RetrievalReport> reports) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "mode" << std::setw(6) << "dir" << std::right
     << std::setw(9) << "R@1" << std::setw(9) << "R@5" << std::setw(9) << "R@10" << std::setw(13)
     << "preselect_s" << std::setw(11) << "rerank_s" << std::setw(11) << "total_s" << '\n';
  os << std::fixed;
  for (const auto& r : reports) {
    os << std::left << std::setw(14) << r.mode << std::setw(6) << to_string(r.direction)
       << std::right << std::setprecision(4) << std::setw(9) << r.recall1 << std::setw(9)
       << r.recall5 << std::setw(9) << r.recall10 << std::setprecision(4) << std::setw(13)
       << r.preselect_s << std::setw(11) << r.rerank_s << std::setw(11) << r.total_s << '\n';
  }
  return os.str();
}

void write_report_tsv(std::span<const RetrievalReport> reports, const std::filesystem::path& path) {
  std::string out = std::string(kReportHeader) + '\n';
  for (const auto& r : reports) out += report_tsv_row(r) + '\n';
  detail::write_file(path, out);
}

}  // namespace scav
