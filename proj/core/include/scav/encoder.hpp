#pragma once

#include <cstdint>
#include <string>

#include "scav/types.hpp"

namespace scav {

/// Per-modality encoder: learned absolute positions, a width-3 depthwise
/// temporal convolution, then a per-frame tanh MLP to the shared latent dim.
struct BranchParams {
  Matrix pos;   // max_len x in
  Matrix conv;  // 3 x in, taps for frames t-1, t, t+1
  Matrix w1;    // in x hidden
  Matrix b1;    // 1 x hidden
  Matrix w2;    // hidden x out
  Matrix b2;    // 1 x out

  int input_dim() const { return static_cast<int>(w1.rows()); }
  int output_dim() const { return static_cast<int>(w2.cols()); }
  int max_len() const { return static_cast<int>(pos.rows()); }

  template <typename F>
  void for_each(F&& f) {
    f("pos", pos);
    f("conv", conv);
    f("w1", w1);
    f("b1", b1);
    f("w2", w2);
    f("b2", b2);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<BranchParams*>(this)->for_each(
        [&](const char* name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }
};

struct EncoderParams {
  BranchParams video;
  BranchParams audio;

  const BranchParams& branch(Modality m) const { return m == Modality::Video ? video : audio; }
  BranchParams& branch(Modality m) { return m == Modality::Video ? video : audio; }

  /// Visits every tensor as ("video.w1", matrix) etc. in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    video.for_each([&](const char* n, Matrix& m) { f(std::string("video.") + n, m); });
    audio.for_each([&](const char* n, Matrix& m) { f(std::string("audio.") + n, m); });
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<EncoderParams*>(this)->for_each(
        [&](const std::string& n, Matrix& m) { f(n, static_cast<const Matrix&>(m)); });
  }
};

struct EncoderDims {
  int video_dim = 0;
  int audio_dim = 0;
  int hidden_dim = 64;
  int latent_dim = 16;
  int max_len = 0;
};

/// Small-uniform projections, zero biases and positions, identity conv.
EncoderParams init_encoder(const EncoderDims& dims, std::uint64_t seed);

BranchParams zeros_like(const BranchParams& p);
EncoderParams zeros_like(const EncoderParams& p);

/// Intermediates kept for the backward pass.
struct BranchCache {
  Matrix positioned;  // input + positions
  Matrix mixed;       // after the temporal conv
  Matrix hidden;      // tanh activations
};

Matrix encode(const BranchParams& params, const Matrix& seq, BranchCache* cache = nullptr);

/// Accumulates parameter gradients into `grads` and returns dL/dseq.
/// Recomputes the forward pass when no cache is given.
Matrix encode_backward(const BranchParams& params, const Matrix& seq, const Matrix& upstream,
                       BranchParams& grads, const BranchCache* cache = nullptr);

}  // namespace scav
