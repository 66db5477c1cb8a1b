#pragma once

#include <vector>

#include "hyperwave/autodiff.hpp"

namespace hyperwave {

// Mean over the batch of -log sigmoid(pos - neg); inputs are B x 1 score
// columns. Overflow-safe through the log-sigmoid primitive.
NodeId bpr_loss(Tape& tape, NodeId scores_pos, NodeId scores_neg);

// Cross-view InfoNCE for one layer: rows of z and gamma are the two views of
// the same entities. Cosine similarity, temperature tau, in-batch
// denominators over all row pairs, stable via logsumexp; returns the sum over
// entities (1 x 1).
NodeId infonce_pair(Tape& tape, NodeId z, NodeId gamma, double tau);

// Sums infonce_pair over aligned layers l = 0..min(|z|, |gamma|)-1 after
// gathering the batch entity rows from each full-size view.
NodeId infonce_cross_view(Tape& tape, const std::vector<NodeId>& z_layers,
                          const std::vector<NodeId>& gamma_layers,
                          const std::vector<int>& entity_ids, double tau);

// Sum of squared entries as a 1 x 1 node.
NodeId sum_squares(Tape& tape, NodeId a);

struct TotalLossIds {
  NodeId total = -1;
  NodeId reg = -1;  // plain squared norm, before the lambda_reg factor
};

// total = bpr + lambda_ssl (ssl_users + ssl_items) + lambda_reg (|E_u|^2 +
// |E_i|^2). Pass -1 for an absent ssl term.
TotalLossIds total_loss(Tape& tape, NodeId bpr, NodeId ssl_users, NodeId ssl_items,
                        NodeId user_embed, NodeId item_embed, double lambda_ssl,
                        double lambda_reg);

}  // namespace hyperwave
