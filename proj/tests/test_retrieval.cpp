#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "oracle_values.hpp"
#include "scav/retrieval.hpp"
#include "scav/seqdata.hpp"
#include "scav/trainer.hpp"
#include "test_util.hpp"

namespace scav {
namespace {

using test::random_matrix;
using test::TempDir;
using test::to_matrix;

std::vector<EncodedSequence> named(const std::vector<Matrix>& ms, const std::string& prefix) {
  std::vector<EncodedSequence> out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03zu", prefix.c_str(), i);
    out.push_back({buf, ms[i]});
  }
  return out;
}

EncodedPairs random_pairs(int n, int len, int dim, double noise, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.num_pairs = n;
  cfg.dim_v = cfg.dim_a = cfg.latent_dim = dim;
  cfg.identity_projections = true;
  cfg.len_v = cfg.len_a = len;
  cfg.noise_std = noise;
  cfg.seed = seed;
  cfg.distractor_correlation = 0.5;
  return as_encoded(synthesize(cfg));
}

TEST(Agg, SelfQueriesRankThemselvesFirst) {
  std::mt19937_64 rng(1);
  std::vector<Matrix> ms;
  for (int i = 0; i < 12; ++i) ms.push_back(random_matrix(4, 3, rng));
  const auto seqs = named(ms, "s");
  const auto r = agg_retrieve(seqs, seqs, 3);
  for (std::size_t i = 0; i < seqs.size(); ++i) EXPECT_EQ(r[i][0], i);
}

TEST(Agg, TwoCandidateOrder) {
  const auto q = named({to_matrix({{1, 0}})}, "q");
  const auto k = named({to_matrix({{1, 0}}), to_matrix({{0, 1}})}, "k");
  EXPECT_EQ(agg_retrieve(q, k, 2)[0], (std::vector<std::size_t>{0, 1}));
}

TEST(Agg, MatchesExhaustiveOracle) {
  const auto q = named({to_matrix(oracle::kAggQuery0), to_matrix(oracle::kAggQuery1),
                        to_matrix(oracle::kAggQuery2), to_matrix(oracle::kAggQuery3)},
                       "q");
  std::vector<Matrix> cands;
  for (const auto* c : {&oracle::kAggCand0, &oracle::kAggCand1, &oracle::kAggCand2, &oracle::kAggCand3,
                        &oracle::kAggCand4, &oracle::kAggCand5, &oracle::kAggCand6, &oracle::kAggCand7})
    cands.push_back(to_matrix(*c));
  const auto r = agg_retrieve(q, named(cands, "k"), 8);
  EXPECT_EQ(r[0], oracle::kAggOrder0);
  EXPECT_EQ(r[1], oracle::kAggOrder1);
  EXPECT_EQ(r[2], oracle::kAggOrder2);
  EXPECT_EQ(r[3], oracle::kAggOrder3);
}

TEST(Agg, TiesBreakByCandidateId) {
  const auto q = named({to_matrix({{1, 1}})}, "q");
  // Same direction, different ids: "a" before "b" regardless of position.
  std::vector<EncodedSequence> k{{"b", to_matrix({{2, 2}})}, {"c", to_matrix({{1, 0}})}, {"a", to_matrix({{1, 1}})}};
  EXPECT_EQ(agg_retrieve(q, k, 3)[0], (std::vector<std::size_t>{2, 0, 1}));
}

TEST(Agg, ZeroNormRejected) {
  const auto q = named({to_matrix({{0, 0}})}, "q");
  const auto k = named({to_matrix({{1, 0}})}, "k");
  EXPECT_THROW(agg_retrieve(q, k, 1), NumericError);
}

TEST(Seq, MatchesExhaustiveKernelCalls) {
  const auto q = named({to_matrix(oracle::kSeqQuery)}, "q");
  const auto k = named({to_matrix(oracle::kSeqCand0), to_matrix(oracle::kSeqCand1),
                        to_matrix(oracle::kSeqCand2)},
                       "k");
  const EuclInterp kind{Direction::V2A};
  // The audio query is the audio-role argument; candidates are videos.
  EXPECT_EQ(seq_retrieve(q, k, kind, Modality::Audio, 3)[0], oracle::kSeqOrder);
  EXPECT_NEAR(eucl_dist(k[0].data, q[0].data, Direction::V2A), oracle::kSeqDist0, 1e-12);
  EXPECT_NEAR(eucl_dist(k[1].data, q[0].data, Direction::V2A), oracle::kSeqDist1, 1e-12);
  EXPECT_NEAR(eucl_dist(k[2].data, q[0].data, Direction::V2A), oracle::kSeqDist2, 1e-12);
}

TEST(Seq, ExactDuplicateRanksFirst) {
  std::mt19937_64 rng(2);
  std::vector<Matrix> ms;
  for (int i = 0; i < 6; ++i) ms.push_back(random_matrix(5, 2, rng));
  const auto cands = named(ms, "k");
  const std::vector<EncodedSequence> q{{"q", ms[4]}};
  EXPECT_EQ(seq_retrieve(q, cands, EuclInterp{}, Modality::Video, 1)[0][0], 4u);
}

TEST(Seq, DeterministicAcrossWorkers) {
  const auto data = random_pairs(30, 6, 3, 0.5, 3);
  for (const DistanceKind& k : {DistanceKind{SoftDtw{}}, DistanceKind{Wasserstein{}}}) {
    const auto a = seq_retrieve(data.audios, data.videos, k, Modality::Audio, 10, 1);
    const auto b = seq_retrieve(data.audios, data.videos, k, Modality::Audio, 10, 4);
    EXPECT_EQ(a, b);
  }
}

TEST(Hybrid, BoundaryIdentities) {
  const auto data = random_pairs(40, 6, 3, 0.8, 4);
  const SoftDtw kind{0.1};
  const int K = static_cast<int>(data.size());
  const auto seq = seq_retrieve(data.audios, data.videos, kind, Modality::Audio, 10);
  const auto agg = agg_retrieve(data.audios, data.videos, 10);
  const auto full = hybrid_retrieve(data.audios, data.videos, K, kind, Modality::Audio, 10);
  const auto one = hybrid_retrieve(data.audios, data.videos, 1, kind, Modality::Audio, 10);
  for (std::size_t q = 0; q < seq.size(); ++q) {
    EXPECT_EQ(full[q][0], seq[q][0]);
    EXPECT_EQ(one[q][0], agg[q][0]);
  }
  EXPECT_EQ(full, seq);
  EXPECT_EQ(one, agg);
}

TEST(Hybrid, KOutOfRange) {
  const auto data = random_pairs(5, 4, 2, 0.1, 5);
  EXPECT_THROW(hybrid_retrieve(data.audios, data.videos, 0, EuclInterp{}, Modality::Audio, 1),
               InvalidArgument);
  EXPECT_THROW(hybrid_retrieve(data.audios, data.videos, 6, EuclInterp{}, Modality::Audio, 1),
               InvalidArgument);
}

TEST(Hybrid, LargerPoolDoesNotLoseRecallOnSeededSet) {
  // Not a theorem; checked on this seed (k=100: 0.47, k=10: 0.40).
  SynthConfig cfg;
  cfg.num_pairs = 1000;
  cfg.dim_v = cfg.dim_a = cfg.latent_dim = 4;
  cfg.identity_projections = true;
  cfg.len_v = 12;
  cfg.len_a = 9;
  cfg.noise_std = 0.6;
  cfg.distractor_correlation = 0.6;
  cfg.seed = 6;
  const auto data = as_encoded(synthesize(cfg));
  const auto task = make_task(data, data, Direction::A2V, 100);
  const auto k100 = retrieve(task, Hybrid{100, EuclInterp{}});
  const auto k10 = retrieve(task, Hybrid{10, EuclInterp{}});
  EXPECT_GE(k100.recall1, k10.recall1);
}

TEST(Recall, Fractions) {
  const Rankings r{{0, 1}, {1, 0}, {2, 0}, {0, 3}};
  const std::vector<std::size_t> pos{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(recall_at(r, pos, 1, 4), 0.75);
  EXPECT_DOUBLE_EQ(recall_at(r, pos, 2, 4), 1.0);
  const std::vector<std::size_t> first{0, 1, 2, 0};
  EXPECT_DOUBLE_EQ(recall_at(r, first, 1, 4), 1.0);
  const std::vector<std::size_t> never{3, 3, 3, 2};
  EXPECT_DOUBLE_EQ(recall_at(r, never, 2, 4), 0.0);
  const std::vector<std::size_t> missing{0, 1, 2, 9};
  EXPECT_THROW(recall_at(r, missing, 1, 4), InvalidArgument);
}

TEST(Recall, MonotoneInR) {
  const auto data = random_pairs(50, 5, 3, 1.0, 7);
  const auto task = make_task(data, data, Direction::V2A);
  const auto rep = retrieve(task, Seq{SoftDtw{}});
  EXPECT_LE(rep.recall1, rep.recall5);
  EXPECT_LE(rep.recall5, rep.recall10);
}

TEST(Task, MatchesPositivesById) {
  auto data = random_pairs(6, 4, 2, 0.1, 8);
  EncodedPairs shuffled = data;
  std::reverse(shuffled.videos.begin(), shuffled.videos.end());
  const auto task = make_task(data, shuffled, Direction::A2V, 4);
  ASSERT_EQ(task.queries.size(), 4u);
  EXPECT_EQ(task.query_modality(), Modality::Audio);
  for (std::size_t q = 0; q < 4; ++q) EXPECT_EQ(task.candidates[task.positives[q]].id, task.queries[q].id);
  EncodedPairs other = data;
  other.videos[0].id = "zzz";
  other.audios[0].id = "zzz";
  EXPECT_THROW(make_task(data, other, Direction::A2V), InvalidArgument);
}

TEST(Bench, RowPerModeAndDirection) {
  TempDir dir;
  const auto data = random_pairs(20, 5, 3, 0.5, 9);
  const std::vector<RetrievalMode> modes{Agg{}, Seq{}, Hybrid{5, EuclInterp{}}};
  const std::vector<Direction> dirs{Direction::A2V, Direction::V2A};
  const auto reports = bench(data, data, modes, dirs, 1000);
  ASSERT_EQ(reports.size(), 6u);
  const auto task = make_task(data, data, Direction::A2V);
  const auto agg = agg_retrieve(task.queries, task.candidates, 10);
  EXPECT_DOUBLE_EQ(reports[0].recall1, recall_at(agg, task.positives, 1, task.candidates.size()));
  EXPECT_EQ(reports[2].mode, "hybrid:5");
  write_report_tsv(reports, dir / "r.tsv");
  std::ifstream is(dir / "r.tsv");
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, kReportHeader);
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  EXPECT_EQ(rows, 6);
  EXPECT_NE(format_table(reports).find("R@1"), std::string::npos);
}

}  // namespace
}  // namespace scav
