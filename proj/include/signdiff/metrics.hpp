#pragma once

#include <array>
#include <string>
#include <vector>

#include "signdiff/model.hpp"
#include "signdiff/motion.hpp"
#include "signdiff/vocab.hpp"

namespace signdiff {

// Corpus BLEU over token streams: clipped modified n-gram precision,
// geometric mean of orders 1..max_n, brevity penalty. No smoothing; a zero
// precision at any order scores 0. Range [0, 100].
double corpus_bleu(const std::vector<std::vector<int>>& hyps,
                   const std::vector<std::vector<int>>& refs, int max_n = 4);

// Single-pair convenience wrapper (a corpus of one).
double sibleu(const std::vector<int>& hyp, const std::vector<int>& ref, int max_n = 4);

struct SiBleuReport {
    double body = 0.0;
    double hands = 0.0;  // mean of the left and right stream scores
};

SiBleuReport sibleu_corpus(const std::vector<TokenSequence>& hyps,
                           const std::vector<TokenSequence>& refs);

// Dynamic time warping distance with symmetric step weights (diagonal 2,
// horizontal/vertical 1) normalized by rows+cols, which makes the
// normalization path-independent. Frame cost is the root-mean-square
// difference over the selected columns; no spatial pre-alignment.
double dtw_jpe(const MotionSequence& gen, const MotionSequence& ref,
               const std::vector<int>& columns);

struct DtwReport {
    double body = 0.0;
    double hands = 0.0;
};

DtwReport dtw_corpus(const std::vector<MotionSequence>& gen, const std::vector<MotionSequence>& ref);

struct MetricReport {
    SiBleuReport sibleu;
    DtwReport dtw;
    int samples = 0;

    std::string to_table() const;
    std::string to_line() const;  // metric=value pairs on one line
};

// Wall-clock and call-count comparison between parallel and left-to-right
// decoding at a fixed generated length.
struct LatencyReport {
    int repeats = 0;
    int generated_tokens = 0;
    double mdlm_plain_mean = 0.0, mdlm_plain_std = 0.0;
    double mdlm_utc_mean = 0.0, mdlm_utc_std = 0.0;
    double ar_mean = 0.0, ar_std = 0.0;
    int mdlm_plain_calls = 0;
    int mdlm_utc_calls = 0;
    int ar_calls = 0;

    std::string to_table() const;
};

LatencyReport bench_latency(const SeqModel& mdlm, const SeqModel& ar,
                            const std::vector<std::vector<int>>& texts, int M, int k, int repeats,
                            int warmup = 2);

}  // namespace signdiff
