#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "adarank/adapter.hpp"
#include "adarank/importance.hpp"

namespace adarank {

// Total active rank over time: b_init through warm-up, a cubic decay to
// b_target, then b_target for the final t_final steps:
//
//   b(t) = b_T + floor((b_0 - b_T) * (1 - (t - t_i) / (T - t_i - t_f))^3)
struct BudgetSchedule {
  std::size_t b_init = 0;
  std::size_t b_target = 0;
  std::size_t t_warmup = 0;
  std::size_t t_final = 0;
  std::size_t t_total = 1;

  // b_init = round(1.5 * b_target).
  static BudgetSchedule with_default_init(std::size_t b_target, std::size_t t_warmup,
                                          std::size_t t_final, std::size_t t_total);
  // Throws ConfigError when the invariants do not hold.
  void validate() const;
  std::size_t decay_end() const { return t_total - t_final; }
};

std::size_t budget_at(const BudgetSchedule& schedule, std::size_t t);

struct TripletId {
  std::size_t layer_id;
  std::size_t triplet_index;
  auto operator<=>(const TripletId&) const = default;
};

struct AllocationDecision {
  std::size_t step = 0;
  std::size_t budget = 0;
  std::vector<TripletId> kept;    // sorted ascending
  std::vector<TripletId> pruned;  // sorted ascending
};

// Keeps the `budget` highest-scoring triplets. Ties go to the smaller
// (layer_id, triplet_index).
AllocationDecision allocate(std::span<const TripletScore> scores, std::size_t budget,
                            std::size_t step = 0);

// Rewrites every layer mask from the decision.
void apply_allocation(const AllocationDecision& decision, std::span<AdapterLayer> layers);

struct RankCell {
  std::size_t layer;
  std::string module;
  std::size_t rank;
};

std::vector<RankCell> rank_distribution(std::span<const AdapterLayer> layers,
                                        std::span<const std::string> modules);

// Header `layer,module,rank`, one row per adapter.
void write_rank_csv(std::ostream& out, std::span<const RankCell> cells);

}  // namespace adarank
