#include "hyperwave/losses.hpp"

#include <algorithm>

#include "hyperwave/types.hpp"

namespace hyperwave {

NodeId bpr_loss(Tape& tape, NodeId scores_pos, NodeId scores_neg) {
  require(tape.value(scores_pos).rows() == tape.value(scores_neg).rows() &&
              tape.value(scores_pos).cols() == 1 &&
              tape.value(scores_neg).cols() == 1,
          "bpr_loss expects equal-length score columns");
  NodeId margin = tape.add(scores_pos, tape.scale(scores_neg, -1.0));
  NodeId ls = tape.log_sigmoid(margin);
  return tape.scale(tape.mean_rows(ls), -1.0);
}

NodeId infonce_pair(Tape& tape, NodeId z, NodeId gamma, double tau) {
  require(tau > 0.0, "infonce_pair: tau must be positive");
  const auto b = tape.value(z).rows();
  require(b == tape.value(gamma).rows() &&
              tape.value(z).cols() == tape.value(gamma).cols(),
          "infonce_pair: view shapes must match");
  NodeId zn = tape.l2_normalize_rows(z);
  NodeId gn = tape.l2_normalize_rows(gamma);
  NodeId sims = tape.scale(tape.matmul(zn, gn, false, true), 1.0 / tau);
  NodeId pos = tape.scale(tape.row_dot(zn, gn), 1.0 / tau);
  NodeId per_entity = tape.add(tape.logsumexp_rows(sims), tape.scale(pos, -1.0));
  // mean_rows of a column gives the mean; rescale to the per-entity sum.
  return tape.scale(tape.mean_rows(per_entity), static_cast<double>(b));
}

NodeId infonce_cross_view(Tape& tape, const std::vector<NodeId>& z_layers,
                          const std::vector<NodeId>& gamma_layers,
                          const std::vector<int>& entity_ids, double tau) {
  require(!entity_ids.empty(), "infonce_cross_view: empty entity batch");
  const std::size_t layers = std::min(z_layers.size(), gamma_layers.size());
  require(layers >= 1, "infonce_cross_view: no aligned layers");
  NodeId total = -1;
  for (std::size_t l = 0; l < layers; ++l) {
    NodeId zb = tape.gather_rows(z_layers[l], entity_ids);
    NodeId gb = tape.gather_rows(gamma_layers[l], entity_ids);
    NodeId term = infonce_pair(tape, zb, gb, tau);
    total = total < 0 ? term : tape.add(total, term);
  }
  return total;
}

NodeId sum_squares(Tape& tape, NodeId a) {
  const auto rows = tape.value(a).rows();
  const auto cols = tape.value(a).cols();
  NodeId sq = tape.elementwise_mul(a, a);
  NodeId col_means = tape.mean_rows(sq);  // 1 x d
  NodeId s = tape.matmul(col_means, tape.constant(Mat::Ones(cols, 1)));
  return tape.scale(s, static_cast<double>(rows));
}

TotalLossIds total_loss(Tape& tape, NodeId bpr, NodeId ssl_users, NodeId ssl_items,
                        NodeId user_embed, NodeId item_embed, double lambda_ssl,
                        double lambda_reg) {
  TotalLossIds out;
  out.reg = tape.add(sum_squares(tape, user_embed), sum_squares(tape, item_embed));
  NodeId total = bpr;
  if (lambda_ssl != 0.0 && ssl_users >= 0) {
    NodeId ssl = ssl_items >= 0 ? tape.add(ssl_users, ssl_items) : ssl_users;
    total = tape.add(total, tape.scale(ssl, lambda_ssl));
  }
  if (lambda_reg != 0.0) {
    total = tape.add(total, tape.scale(out.reg, lambda_reg));
  }
  out.total = total;
  return out;
}

}  // namespace hyperwave
