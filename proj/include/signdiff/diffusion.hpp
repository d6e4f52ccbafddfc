#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "signdiff/vocab.hpp"

namespace signdiff {

// Per-index fill distributions for the reverse transition. Text-side rows
// (text positions and the separator) are categoricals over text classes;
// span rows carry one categorical per part head. Rows exist only for
// masked positions.
struct FillDist {
    std::map<int, std::vector<double>> text_rows;                    // flat pos -> text classes
    std::map<int, std::array<std::vector<double>, kNumParts>> span_rows;  // slot -> part classes

    bool empty() const { return text_rows.empty() && span_rows.empty(); }
};

// Independently masks each maskable index with probability t and writes
// mask_id into masked positions. In finetune mode only span slots are
// maskable; in pretrain mode text and separator indices are too.
MaskState forward_mask(const PaddedSequence& seq, double t, MaskMode mode, uint64_t rng_seed,
                       const VocabSpec& vocab);

// One reverse transition from noise level state.t down to s. Unmasked
// tokens are carried over unchanged; each masked index survives as a mask
// with probability s/t and is otherwise filled by sampling its row.
MaskState reverse_step(const MaskState& state, double s, const FillDist& fill, uint64_t rng_seed,
                       const VocabSpec& vocab);

// Point-mass fill rows on the ground truth, for process-level tests and
// oracle-backed generation. truth must share the state's layout.
FillDist oracle_fill_dist(const MaskState& state, const PaddedSequence& truth,
                          const VocabSpec& vocab);

// Samples a class index from a categorical row (must sum to ~1).
int sample_categorical(const std::vector<double>& probs, double u);

}  // namespace signdiff
