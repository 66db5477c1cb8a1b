#pragma once

#include <vector>

#include "hyperwave/autodiff.hpp"
#include "hyperwave/hdnn.hpp"
#include "hyperwave/spectral.hpp"

namespace hyperwave {

enum class WaveletCombine { add, concat };

// Spectral-filter parameters for one channel. `lambda_raw` holds the
// pre-softplus filter diagonals (length n each); it has either one entry per
// layer or a single shared entry. `weight` is one d x d matrix per layer.
struct WaveletParamIds {
  std::vector<NodeId> lambda_raw;
  std::vector<NodeId> weight;
};

// One wavelet convolution layer: basis.forward * diag(softplus(lambda_raw)) *
// basis.inverse * x * w, combined with the residual x either by plain
// addition or by width-doubling concat followed by a fixed averaging
// projection back to d.
NodeId wavelet_layer(Tape& tape, NodeId x, const WaveletBasis& basis,
                     NodeId lambda_raw, NodeId w,
                     WaveletCombine combine = WaveletCombine::add);

// Stacks layers (count taken from params.weight) and averages
// {x0, per-layer outputs}, mirroring the diffusion encoder readout.
EncodeOut wavelet_encode(Tape& tape, NodeId x0, const WaveletBasis& basis,
                         const WaveletParamIds& params,
                         WaveletCombine combine = WaveletCombine::add);

}  // namespace hyperwave
