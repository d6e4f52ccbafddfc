#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "signdiff/linalg.hpp"
#include "signdiff/rng.hpp"
#include "signdiff/vocab.hpp"

namespace signdiff {

// Synthetic pose stream: frames x dims, columns split evenly across the
// three parts (body, left hand, right hand). Units are dimensionless.
struct MotionSequence {
    Matrix frames;

    int length() const { return frames.rows; }
    int dims() const { return frames.cols; }
    int part_dim() const { return frames.cols / kNumParts; }
    int part_offset(int part) const { return part * part_dim(); }
    // column indices of one part
    std::vector<int> part_columns(int part) const;
};

struct MotionConfig {
    int dims = 24;  // divisible by 3
    int lexicon_size = 64;
    int min_signs = 2;
    int max_signs = 8;
    int min_sign_frames = 16;  // multiples of 4
    int max_sign_frames = 40;
    int max_frames = 400;  // 4 * token budget
    double single_hand_fraction = 0.3;

    void validate() const;
};

// One lexical sign: ≤3 sinusoids per column per part, fixed once at
// lexicon construction. Single-handed templates hold the inactive hand at
// the rest pose (all zeros).
struct SignTemplate {
    int frames = 0;
    std::array<bool, kNumParts> active = {true, true, true};
    struct Wave {
        double amp = 0.0;
        double cycles = 0.0;
        double phase = 0.0;
    };
    // [part][column][wave]
    std::vector<std::vector<std::array<Wave, 3>>> waves;

    double value(int part, int column, int frame) const;
};

struct Lexicon {
    MotionConfig config;
    std::vector<SignTemplate> templates;

    static Lexicon build(const MotionConfig& config, uint64_t seed);
};

struct Sample {
    MotionSequence motion;
    std::vector<int> text;  // template id sequence
};

// Composes 2..8 lexicon signs into one motion; text is the id sequence.
Sample gen_synthetic_pair(const Lexicon& lexicon, CounterRng& rng);

std::vector<Sample> gen_synthetic_pairs(int n, uint64_t seed, const MotionConfig& config);

}  // namespace signdiff
