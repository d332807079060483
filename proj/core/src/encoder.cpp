#include "scav/encoder.hpp"

#include <cmath>
#include <random>

namespace scav {

namespace {

Matrix uniform(int rows, int cols, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

BranchParams init_branch(int in, int hidden, int out, int max_len, std::mt19937_64& rng) {
  BranchParams p;
  p.pos = Matrix::Zero(max_len, in);
  p.conv = Matrix::Zero(3, in);
  p.conv.row(1).setOnes();
  p.w1 = uniform(in, hidden, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  p.b1 = Matrix::Zero(1, hidden);
  p.w2 = uniform(hidden, out, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  p.b2 = Matrix::Zero(1, out);
  return p;
}

void check_input(const BranchParams& params, const Matrix& seq) {
  if (seq.rows() < 1) throw InvalidArgument("cannot encode an empty sequence");
  if (seq.cols() != params.input_dim())
    throw InvalidArgument("input dim " + std::to_string(seq.cols()) + " does not match encoder dim " +
                          std::to_string(params.input_dim()));
  if (seq.rows() > params.max_len())
    throw InvalidArgument("sequence length " + std::to_string(seq.rows()) +
                          " exceeds positional table size " + std::to_string(params.max_len()));
}

}  // namespace

EncoderParams init_encoder(const EncoderDims& dims, std::uint64_t seed) {
  if (dims.video_dim < 1 || dims.audio_dim < 1 || dims.hidden_dim < 1 || dims.latent_dim < 1 ||
      dims.max_len < 1)
    throw InvalidArgument("encoder dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  EncoderParams p;
  p.video = init_branch(dims.video_dim, dims.hidden_dim, dims.latent_dim, dims.max_len, rng);
  p.audio = init_branch(dims.audio_dim, dims.hidden_dim, dims.latent_dim, dims.max_len, rng);
  return p;
}

BranchParams zeros_like(const BranchParams& p) {
  BranchParams z = p;
  z.for_each([](const char*, Matrix& m) { m.setZero(); });
  return z;
}

EncoderParams zeros_like(const EncoderParams& p) { return {zeros_like(p.video), zeros_like(p.audio)}; }

Matrix encode(const BranchParams& params, const Matrix& seq, BranchCache* cache) {
  check_input(params, seq);
  const Eigen::Index t_len = seq.rows();
  BranchCache local;
  BranchCache& c = cache ? *cache : local;
  c.positioned = seq + params.pos.topRows(t_len);

  const auto& u = c.positioned;
  c.mixed = u.array().rowwise() * params.conv.row(1).array();
  if (t_len > 1) {
    c.mixed.bottomRows(t_len - 1).array() +=
        u.topRows(t_len - 1).array().rowwise() * params.conv.row(0).array();
    c.mixed.topRows(t_len - 1).array() +=
        u.bottomRows(t_len - 1).array().rowwise() * params.conv.row(2).array();
  }
  c.hidden = ((c.mixed * params.w1).rowwise() + params.b1.row(0)).array().tanh().matrix();
  return (c.hidden * params.w2).rowwise() + params.b2.row(0);
}

Matrix encode_backward(const BranchParams& params, const Matrix& seq, const Matrix& upstream,
                       BranchParams& grads, const BranchCache* cache) {
  check_input(params, seq);
  if (upstream.rows() != seq.rows() || upstream.cols() != params.output_dim())
    throw InvalidArgument("upstream gradient shape does not match the encoder output");
  BranchCache local;
  if (!cache) {
    encode(params, seq, &local);
    cache = &local;
  }
  const Eigen::Index t_len = seq.rows();
  const auto& u = cache->positioned;

  grads.w2 += cache->hidden.transpose() * upstream;
  grads.b2 += upstream.colwise().sum();
  const Matrix g_hidden = upstream * params.w2.transpose();
  const Matrix g_pre = g_hidden.array() * (1.0 - cache->hidden.array().square());
  grads.w1 += cache->mixed.transpose() * g_pre;
  grads.b1 += g_pre.colwise().sum();
  const Matrix g_mixed = g_pre * params.w1.transpose();

  // mixed[t] = k0*u[t-1] + k1*u[t] + k2*u[t+1]
  grads.conv.row(1) += (g_mixed.array() * u.array()).colwise().sum().matrix();
  Matrix g_u = g_mixed.array().rowwise() * params.conv.row(1).array();
  if (t_len > 1) {
    const auto n = t_len - 1;
    grads.conv.row(0) +=
        (g_mixed.bottomRows(n).array() * u.topRows(n).array()).colwise().sum().matrix();
    grads.conv.row(2) +=
        (g_mixed.topRows(n).array() * u.bottomRows(n).array()).colwise().sum().matrix();
    g_u.topRows(n).array() += g_mixed.bottomRows(n).array().rowwise() * params.conv.row(0).array();
    g_u.bottomRows(n).array() += g_mixed.topRows(n).array().rowwise() * params.conv.row(2).array();
  }
  grads.pos.topRows(t_len) += g_u;
  return g_u;
}

}  // namespace scav
