#include "hyperwave/hdnn.hpp"

#include "hyperwave/types.hpp"

namespace hyperwave {

NodeId mlp_apply(Tape& tape, const MlpParamIds& p, NodeId x) {
  NodeId h = tape.add(tape.matmul(x, p.w1), p.b1);
  h = tape.relu(h);
  return tape.add(tape.matmul(h, p.w2), p.b2);
}

HdnnLayerOut hdnn_layer(Tape& tape, NodeId x, const LinearMap& prop,
                        const HdnnParamIds& p) {
  HdnnLayerOut out;
  NodeId m1 = tape.sparse_apply(prop, mlp_apply(tape, p.mlp1, x));
  out.x_e = tape.add(tape.layer_norm(m1, p.ln1_gain, p.ln1_bias), x);
  NodeId m2 = tape.sparse_apply(prop, mlp_apply(tape, p.mlp2, out.x_e));
  out.x_v = tape.add(tape.layer_norm(m2, p.ln2_gain, p.ln2_bias), out.x_e);
  return out;
}

EncodeOut hdnn_encode(Tape& tape, NodeId x0, const LinearMap& prop,
                      const HdnnParamIds& p, int layers) {
  require(layers >= 1, "hdnn_encode needs at least one layer");
  EncodeOut out;
  out.layer_outputs.push_back(x0);
  NodeId sum = x0;
  NodeId x = x0;
  for (int l = 0; l < layers; ++l) {
    x = hdnn_layer(tape, x, prop, p).x_v;
    out.layer_outputs.push_back(x);
    sum = tape.add(sum, x);
  }
  out.readout = tape.scale(sum, 1.0 / static_cast<double>(layers + 1));
  return out;
}

}  // namespace hyperwave
