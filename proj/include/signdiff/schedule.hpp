#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "signdiff/bigint.hpp"

namespace signdiff {

enum class ScheduleVariant { plain, utc };

ScheduleVariant parse_variant(const std::string& name);
const char* variant_name(ScheduleVariant v);

struct ScheduleStage {
    double start_t = 1.0;
    double end_t = 0.0;
    std::vector<int> allowed_positions;  // 0-based span slots, ascending
};

struct ScheduleStep {
    int index = 0;
    int stage = 0;
    int unmask_count = 0;
    std::vector<int> candidate_positions;  // subset of the stage's allowed set
};

struct UnmaskSchedule {
    int total = 0;  // M
    int k = 0;
    ScheduleVariant variant = ScheduleVariant::plain;
    std::vector<ScheduleStage> stages;
    std::vector<ScheduleStep> steps;

    int step_count() const { return static_cast<int>(steps.size()); }
    // Cumulative unmasked count after each step.
    std::vector<int> cumulative_counts() const;
    std::string to_table() const;
};

// Checkpoint grids over 0-based slots. Stage 1 is the stride-4 grid
// {0,4,8,...}, stage 2 the remaining stride-2 positions {2,6,10,...},
// stage 3 everything else. Sizes come out to ceil(M/4), ceil(M/2)-ceil(M/4)
// and M-ceil(M/2) exactly.
std::vector<int> utc_stage_grid(int M, int stage);
std::vector<int> utc_stage_sizes(int M);

// plain: one stage over all positions, ceil(M/k) steps of size k with a
// smaller final step. utc: three checkpointed stages, each scheduled the
// same way over its own grid.
UnmaskSchedule build_schedule(int M, int k, ScheduleVariant variant);

// Picks step.unmask_count indices with the highest confidence among the
// step's candidates; ties are broken by a seeded per-index hash.
// confidences must cover exactly the masked candidates of this step.
std::vector<int> select_unmask(const std::map<int, double>& confidences, const ScheduleStep& step,
                               uint64_t tie_seed);

// Exact number of distinct unmasking orders.
BigUint count_orders_plain(int M, int k);
BigUint count_orders_utc(int M, int k);

// A reachable unmasked-index set at noise level t under the checkpointed
// schedule: earlier grids fill completely before later ones, and the
// frontier grid gets a seeded subset so the total is ceil((1-t)*M).
std::vector<int> training_index_filter(int M, double t, uint64_t rng_seed);

// Replays the stage constraints; true iff the set is reachable by some
// checkpointed trajectory.
bool utc_state_reachable(int M, const std::vector<int>& unmasked);

}  // namespace signdiff
