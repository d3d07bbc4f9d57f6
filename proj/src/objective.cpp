#include "mdvt/objective.hpp"

#include <cmath>
#include <unordered_set>

#include "mdvt/error.hpp"

namespace mdvt {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double bpr_loss(std::span<const double> gaps) {
  if (gaps.empty()) return 0.0;
  double sum = 0.0;
  for (double g : gaps) sum += softplus(-g);
  return sum / static_cast<double>(gaps.size());
}

namespace {

void group_mean(std::span<const std::uint32_t> items, const Matrix& fused_items, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (auto i : items) axpy(1.0, fused_items.row(i), out);
  const double inv = 1.0 / static_cast<double>(items.size());
  for (auto& x : out) x *= inv;
}

const Selection& require_group(std::uint32_t user, const VirtualTripletSet& set) {
  const auto* group = set.find(user);
  if (group == nullptr) throw TrainingError("virtual triplets: user " + std::to_string(user) + " is absent");
  return *group;
}

// Batch entries that carry a virtual term, in batch order.
std::vector<std::uint32_t> virtual_users(const TripletBatch& batch, const VirtualTripletSet& set, bool per_user) {
  std::vector<std::uint32_t> users;
  std::unordered_set<std::uint32_t> seen;
  for (const auto& t : batch) {
    if (per_user && !seen.insert(t.user).second) continue;
    if (require_group(t.user, set).positives.empty()) continue;
    users.push_back(t.user);
  }
  return users;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> aggregate_virtual(std::uint32_t user, const VirtualTripletSet& set,
                                                                      const Matrix& fused_items) {
  const auto& group = require_group(user, set);
  if (group.positives.empty() || group.negatives.empty())
    throw TrainingError("virtual triplets: user " + std::to_string(user) + " has an empty group");
  std::vector<double> pos(fused_items.cols), neg(fused_items.cols);
  group_mean(group.positives, fused_items, pos);
  group_mean(group.negatives, fused_items, neg);
  return {std::move(pos), std::move(neg)};
}

double combined_loss(double l_bpr, double l_vbpr, double lambda, LossScaling scaling) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  return scaling == LossScaling::kAligned ? (1.0 - lambda) * l_bpr + lambda * l_vbpr : l_bpr + lambda * l_vbpr;
}

namespace {

// Accumulates the virtual loss sum and, when `grad_user`/`grad_items` are
// given, d(term sum)/d(fused) scaled by `scale`.
double virtual_terms(const TripletBatch& batch, const VirtualTripletSet& set, const Representations& reps,
                     const ObjectiveOptions& options, std::size_t* term_count, double scale, Matrix* grad_users,
                     Matrix* grad_items) {
  const auto users = virtual_users(batch, set, options.virtual_per_user);
  *term_count = users.size();
  if (users.empty()) return 0.0;
  const double inv_terms = 1.0 / static_cast<double>(users.size());
  const std::size_t dim = reps.fused_items.cols;
  std::vector<double> pos(dim), neg(dim);

  double total = 0.0;
  for (auto u : users) {
    const auto& group = *set.find(u);
    const auto eu = reps.fused_users.row(u);
    if (!options.without_aggregation) {
      group_mean(group.positives, reps.fused_items, pos);
      group_mean(group.negatives, reps.fused_items, neg);
      const double gap = dot(eu, pos) - dot(eu, neg);
      total += softplus(-gap);
      if (grad_users == nullptr) continue;
      const double c = -sigmoid(-gap) * scale * inv_terms;
      axpy(c, pos, grad_users->row(u));
      axpy(-c, neg, grad_users->row(u));
      const double share = c / static_cast<double>(group.positives.size());
      for (auto i : group.positives) axpy(share, eu, grad_items->row(i));
      for (auto i : group.negatives) axpy(-share, eu, grad_items->row(i));
    } else {
      // One pair-wise term per rank-matched (positive, negative) pair.
      for (std::size_t k = 0; k < group.positives.size(); ++k) {
        const auto ip = group.positives[k];
        const auto in = group.negatives[k];
        const double gap = dot(eu, reps.fused_items.row(ip)) - dot(eu, reps.fused_items.row(in));
        total += softplus(-gap);
        if (grad_users == nullptr) continue;
        const double c = -sigmoid(-gap) * scale * inv_terms;
        axpy(c, reps.fused_items.row(ip), grad_users->row(u));
        axpy(-c, reps.fused_items.row(in), grad_users->row(u));
        axpy(c, eu, grad_items->row(ip));
        axpy(-c, eu, grad_items->row(in));
      }
    }
  }
  return total * inv_terms;
}

// Spreads a gradient w.r.t. fused rows over the masked modality finals.
void distribute_fused(const Matrix& grad_users, const Matrix& grad_items, std::span<const std::size_t> mask,
                      std::size_t num_users, std::vector<Matrix>& final_grads) {
  const double share = 1.0 / static_cast<double>(mask.size());
  for (auto m : mask) {
    auto& g = final_grads[m];
    for (std::size_t k = 0; k < grad_users.data.size(); ++k) g.data[k] += share * grad_users.data[k];
    const std::size_t offset = num_users * g.cols;
    for (std::size_t k = 0; k < grad_items.data.size(); ++k) g.data[offset + k] += share * grad_items.data[k];
  }
}

}  // namespace

double virtual_bpr_loss(const TripletBatch& batch, const VirtualTripletSet& set, const Representations& reps,
                        const ObjectiveOptions& options) {
  std::size_t terms = 0;
  return virtual_terms(batch, set, reps, options, &terms, 0.0, nullptr, nullptr);
}

BatchLoss loss_and_final_gradients(const TripletBatch& batch, const VirtualTripletSet* virtual_set,
                                   const Representations& reps, std::span<const std::size_t> mask,
                                   const ObjectiveOptions& options, std::vector<Matrix>* final_grads) {
  BatchLoss out;
  if (batch.empty()) return out;
  const bool joint = virtual_set != nullptr;
  if (joint && !(options.lambda >= 0.0 && options.lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  const double bpr_weight = joint && options.scaling == LossScaling::kAligned ? 1.0 - options.lambda : 1.0;
  const double virtual_weight = joint ? options.lambda : 0.0;

  const std::size_t dim = reps.fused_users.cols;
  const bool want_grad = final_grads != nullptr;
  if (want_grad) {
    final_grads->clear();
    for (const auto& f : reps.finals) final_grads->emplace_back(f.rows, f.cols);
  }
  Matrix fused_grad_users, fused_grad_items;
  if (want_grad && (joint || options.score == ScoreMode::kFused)) {
    fused_grad_users = Matrix(reps.num_users, dim);
    fused_grad_items = Matrix(reps.num_items, dim);
  }

  // Real triplets.
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double bpr_sum = 0.0;
  for (const auto& t : batch) {
    double gap = 0.0;
    if (options.score == ScoreMode::kFused) {
      const auto eu = reps.fused_users.row(t.user);
      gap = dot(eu, reps.fused_items.row(t.positive)) - dot(eu, reps.fused_items.row(t.negative));
    } else {
      for (std::size_t m = 0; m < reps.finals.size(); ++m) {
        const auto eu = reps.final_user(m, t.user);
        gap += dot(eu, reps.final_item(m, t.positive)) - dot(eu, reps.final_item(m, t.negative));
      }
    }
    bpr_sum += softplus(-gap);
    if (!want_grad) continue;
    const double c = -sigmoid(-gap) * bpr_weight * inv_batch;
    if (options.score == ScoreMode::kFused) {
      const auto eu = reps.fused_users.row(t.user);
      axpy(c, reps.fused_items.row(t.positive), fused_grad_users.row(t.user));
      axpy(-c, reps.fused_items.row(t.negative), fused_grad_users.row(t.user));
      axpy(c, eu, fused_grad_items.row(t.positive));
      axpy(-c, eu, fused_grad_items.row(t.negative));
    } else {
      const std::size_t nu = reps.num_users;
      for (std::size_t m = 0; m < reps.finals.size(); ++m) {
        auto& g = (*final_grads)[m];
        const auto eu = reps.final_user(m, t.user);
        axpy(c, reps.final_item(m, t.positive), g.row(t.user));
        axpy(-c, reps.final_item(m, t.negative), g.row(t.user));
        axpy(c, eu, g.row(nu + t.positive));
        axpy(-c, eu, g.row(nu + t.negative));
      }
    }
  }
  out.l_bpr = bpr_sum * inv_batch;

  if (joint) {
    out.l_vbpr = virtual_terms(batch, *virtual_set, reps, options, &out.virtual_terms, virtual_weight,
                               want_grad ? &fused_grad_users : nullptr, want_grad ? &fused_grad_items : nullptr);
    out.l_total = combined_loss(out.l_bpr, *out.l_vbpr, options.lambda, options.scaling);
  } else {
    out.l_total = out.l_bpr;
  }

  if (want_grad && fused_grad_users.rows > 0)
    distribute_fused(fused_grad_users, fused_grad_items, mask, reps.num_users, *final_grads);
  return out;
}

Gradients compute_gradients(const TripletBatch& batch, const VirtualTripletSet* virtual_set,
                            const EmbeddingState& state, const Backbone& backbone,
                            std::span<const std::size_t> mask, const ObjectiveOptions& options) {
  const Representations reps = backbone.forward(state, mask);
  Gradients out;
  out.loss = loss_and_final_gradients(batch, virtual_set, reps, mask, options, &out.tables);
  backbone.backward(out.tables);
  return out;
}

OptimizerState make_optimizer(const EmbeddingState& state, AdamOptions options) {
  OptimizerState opt;
  opt.options = options;
  for (const auto& t : state.tables) {
    opt.first_moment.emplace_back(t.nodes.rows, t.nodes.cols);
    opt.second_moment.emplace_back(t.nodes.rows, t.nodes.cols);
  }
  return opt;
}

void adam_step(EmbeddingState& state, OptimizerState& optimizer, const std::vector<Matrix>& grads) {
  if (grads.size() != state.tables.size()) throw TrainingError("adam_step: gradient/table count mismatch");
  for (std::size_t m = 0; m < grads.size(); ++m) {
    if (grads[m].rows != state.tables[m].nodes.rows || grads[m].cols != state.tables[m].nodes.cols)
      throw TrainingError("adam_step: shape mismatch for table '" + state.tables[m].name + "'");
    for (std::size_t k = 0; k < grads[m].data.size(); ++k) {
      if (!std::isfinite(grads[m].data[k]))
        throw TrainingError("adam_step: non-finite gradient in table '" + state.tables[m].name + "' at (" +
                            std::to_string(k / grads[m].cols) + "," + std::to_string(k % grads[m].cols) + ")");
    }
  }

  const auto& o = optimizer.options;
  ++optimizer.step;
  const double t = static_cast<double>(optimizer.step);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t m = 0; m < grads.size(); ++m) {
    auto& p = state.tables[m].nodes.data;
    auto& m1 = optimizer.first_moment[m].data;
    auto& m2 = optimizer.second_moment[m].data;
    const auto& g = grads[m].data;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] + o.weight_decay * p[k];
      m1[k] = o.beta1 * m1[k] + (1.0 - o.beta1) * gk;
      m2[k] = o.beta2 * m2[k] + (1.0 - o.beta2) * gk * gk;
      p[k] -= o.lr * (m1[k] / bc1) / (std::sqrt(m2[k] / bc2) + o.eps);
    }
  }
}

}  // namespace mdvt
