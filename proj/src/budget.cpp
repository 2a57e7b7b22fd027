#include "adarank/budget.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "adarank/errors.hpp"

namespace adarank {

BudgetSchedule BudgetSchedule::with_default_init(std::size_t b_target, std::size_t t_warmup,
                                                 std::size_t t_final, std::size_t t_total) {
  BudgetSchedule s{static_cast<std::size_t>(std::llround(1.5 * static_cast<double>(b_target))),
                   b_target, t_warmup, t_final, t_total};
  s.validate();
  return s;
}

void BudgetSchedule::validate() const {
  if (b_target == 0) throw ConfigError("target budget must be positive");
  if (b_init < b_target) throw ConfigError("initial budget must be >= target budget");
  if (t_total == 0) throw ConfigError("total steps must be positive");
  if (t_warmup + t_final >= t_total) {
    throw ConfigError("warm-up steps + final steps must be < total steps");
  }
}

std::size_t budget_at(const BudgetSchedule& s, std::size_t t) {
  if (t > s.t_total) {
    throw std::out_of_range("budget_at: step " + std::to_string(t) + " beyond total " +
                            std::to_string(s.t_total));
  }
  if (t <= s.t_warmup) return s.b_init;
  if (t >= s.decay_end()) return s.b_target;
  // Exact integer floor of (b0 - bT) * remaining^3 / span^3.
  using u128 = unsigned __int128;
  const u128 span = s.decay_end() - s.t_warmup;
  const u128 remaining = span - (t - s.t_warmup);
  const u128 extra = static_cast<u128>(s.b_init - s.b_target) * remaining * remaining * remaining /
                     (span * span * span);
  return s.b_target + static_cast<std::size_t>(extra);
}

AllocationDecision allocate(std::span<const TripletScore> scores, std::size_t budget,
                            std::size_t step) {
  if (budget > scores.size()) {
    throw std::invalid_argument("allocate: budget " + std::to_string(budget) + " exceeds " +
                                std::to_string(scores.size()) + " triplets");
  }
  std::vector<TripletScore> order(scores.begin(), scores.end());
  for (const auto& s : order) {
    if (!std::isfinite(s.score)) throw NumericError("allocate: non-finite triplet score");
  }
  std::sort(order.begin(), order.end(), [](const TripletScore& a, const TripletScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return TripletId{a.layer_id, a.triplet_index} < TripletId{b.layer_id, b.triplet_index};
  });
  AllocationDecision d;
  d.step = step;
  d.budget = budget;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < budget ? d.kept : d.pruned;
    dst.push_back({order[i].layer_id, order[i].triplet_index});
  }
  std::sort(d.kept.begin(), d.kept.end());
  std::sort(d.pruned.begin(), d.pruned.end());
  return d;
}

void apply_allocation(const AllocationDecision& decision, std::span<AdapterLayer> layers) {
  std::vector<std::vector<bool>> masks;
  masks.reserve(layers.size());
  for (const auto& l : layers) masks.emplace_back(l.rank(), false);
  for (const auto& id : decision.kept) {
    if (id.layer_id >= layers.size() || id.triplet_index >= layers[id.layer_id].rank()) {
      throw ShapeError("apply_allocation: triplet id out of range");
    }
    masks[id.layer_id][id.triplet_index] = true;
  }
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].set_mask(std::move(masks[i]));
}

std::vector<RankCell> rank_distribution(std::span<const AdapterLayer> layers,
                                        std::span<const std::string> modules) {
  if (modules.size() != layers.size()) throw ShapeError("rank_distribution: one module name per layer");
  std::vector<RankCell> cells;
  cells.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    cells.push_back({i + 1, modules[i], layers[i].active_rank()});
  }
  return cells;
}

void write_rank_csv(std::ostream& out, std::span<const RankCell> cells) {
  out << "layer,module,rank\n";
  for (const auto& c : cells) out << c.layer << ',' << c.module << ',' << c.rank << '\n';
}

}  // namespace adarank
