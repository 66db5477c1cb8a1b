#pragma once

#include <vector>

#include "hyperwave/autodiff.hpp"
#include "hyperwave/spectral.hpp"

namespace hyperwave {

// Two-layer perceptron with relu in between; hidden width equals the
// embedding width. Biases are stored as 1 x d rows and broadcast.
struct MlpParamIds {
  NodeId w1 = -1;
  NodeId b1 = -1;
  NodeId w2 = -1;
  NodeId b2 = -1;
};

// Diffusion-encoder parameters for one channel. The two MLPs and the two
// layer-norm affine pairs are shared across all stacked layers.
struct HdnnParamIds {
  MlpParamIds mlp1;
  MlpParamIds mlp2;
  NodeId ln1_gain = -1;
  NodeId ln1_bias = -1;
  NodeId ln2_gain = -1;
  NodeId ln2_bias = -1;
};

struct HdnnLayerOut {
  NodeId x_e = -1;
  NodeId x_v = -1;
};

struct EncodeOut {
  NodeId readout = -1;                // mean over {x0, per-layer outputs}
  std::vector<NodeId> layer_outputs;  // [x0, layer 1, ..., layer L]
};

NodeId mlp_apply(Tape& tape, const MlpParamIds& p, NodeId x);

// One diffusion layer:
//   x_e = LN(P mlp1(x)) + x
//   x_v = LN(P mlp2(x_e)) + x_e
HdnnLayerOut hdnn_layer(Tape& tape, NodeId x, const LinearMap& prop,
                        const HdnnParamIds& p);

// Stacks `layers` diffusion layers and averages {x0, x_v^(1..layers)}.
EncodeOut hdnn_encode(Tape& tape, NodeId x0, const LinearMap& prop,
                      const HdnnParamIds& p, int layers);

}  // namespace hyperwave
