#include "hyperwave/wavelet.hpp"

#include "hyperwave/types.hpp"

namespace hyperwave {

NodeId wavelet_layer(Tape& tape, NodeId x, const WaveletBasis& basis,
                     NodeId lambda_raw, NodeId w, WaveletCombine combine) {
  NodeId filt = tape.softplus(lambda_raw);
  NodeId y = tape.sparse_apply(basis.inverse(), x);
  y = tape.row_scale(y, filt);
  y = tape.sparse_apply(basis.forward(), y);
  y = tape.matmul(y, w);
  if (combine == WaveletCombine::add) {
    return tape.add(y, x);
  }
  // Concat the residual along the feature axis, then project 2d back to d
  // with the fixed averaging matrix 0.5 [I; I].
  NodeId cat = tape.concat_rows(y, x);
  const auto d = static_cast<int>(tape.value(x).cols());
  Mat proj(2 * d, d);
  proj << 0.5 * Mat::Identity(d, d), 0.5 * Mat::Identity(d, d);
  return tape.matmul(cat, tape.constant(std::move(proj)));
}

EncodeOut wavelet_encode(Tape& tape, NodeId x0, const WaveletBasis& basis,
                         const WaveletParamIds& params, WaveletCombine combine) {
  const auto layers = static_cast<int>(params.weight.size());
  require(layers >= 1, "wavelet_encode needs at least one layer");
  require(params.lambda_raw.size() == params.weight.size() ||
              params.lambda_raw.size() == 1,
          "wavelet_encode: lambda count must be per-layer or shared");
  EncodeOut out;
  out.layer_outputs.push_back(x0);
  NodeId sum = x0;
  NodeId x = x0;
  for (int l = 0; l < layers; ++l) {
    const NodeId lam =
        params.lambda_raw.size() == 1 ? params.lambda_raw[0] : params.lambda_raw[l];
    x = wavelet_layer(tape, x, basis, lam, params.weight[l], combine);
    out.layer_outputs.push_back(x);
    sum = tape.add(sum, x);
  }
  out.readout = tape.scale(sum, 1.0 / static_cast<double>(layers + 1));
  return out;
}

}  // namespace hyperwave
