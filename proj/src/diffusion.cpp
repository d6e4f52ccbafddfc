#include "signdiff/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "signdiff/rng.hpp"

namespace signdiff {

namespace {

void check_row(const std::vector<double>& row, int expect_classes) {
    if (static_cast<int>(row.size()) != expect_classes) {
        throw std::invalid_argument("fill row has wrong class count");
    }
    double sum = 0.0;
    for (double p : row) {
        if (p < 0.0 || !std::isfinite(p)) {
            throw std::invalid_argument("fill row has invalid probability");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("fill row does not sum to 1");
    }
}

}  // namespace

int sample_categorical(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(probs.size()) - 1;
}

MaskState forward_mask(const PaddedSequence& seq, double t, MaskMode mode, uint64_t rng_seed,
                       const VocabSpec& vocab) {
    if (t < 0.0 || t > 1.0 || !std::isfinite(t)) {
        throw std::invalid_argument("noise level t must lie in [0,1]");
    }
    MaskState state;
    state.seq = seq;
    state.t = t;
    state.mode = mode;
    state.text_mask.assign(seq.text_len(), 0);
    state.span_mask.assign(seq.span_len(), 0);

    CounterRng rng(rng_seed);
    CounterRng text_rng = rng.split(1);
    CounterRng span_rng = rng.split(2);

    if (mode == MaskMode::pretrain) {
        for (int i = 0; i < seq.text_len(); ++i) {
            if (text_rng.next_double() < t) {
                state.text_mask[i] = 1;
                state.seq.text[i] = vocab.mask_id();
            }
        }
        if (text_rng.next_double() < t) {
            state.sep_mask = 1;
        }
    }
    for (int slot = 0; slot < seq.span_len(); ++slot) {
        if (span_rng.next_double() < t) {
            state.span_mask[slot] = 1;
            for (int p = 0; p < kNumParts; ++p) {
                state.seq.span[p][slot] = vocab.mask_id();
            }
        }
    }
    return state;
}

MaskState reverse_step(const MaskState& state, double s, const FillDist& fill, uint64_t rng_seed,
                       const VocabSpec& vocab) {
    if (!(s >= 0.0) || s >= state.t) {
        throw std::invalid_argument("reverse_step requires 0 <= s < t");
    }
    const Layout lay = state.layout();
    for (int i = 0; i < lay.text_len; ++i) {
        if (state.text_mask[i]) {
            auto it = fill.text_rows.find(i);
            if (it == fill.text_rows.end()) {
                throw std::invalid_argument("missing fill row for masked text index " +
                                            std::to_string(i));
            }
            check_row(it->second, vocab.text_classes());
        }
    }
    if (state.sep_mask) {
        auto it = fill.text_rows.find(lay.sep_pos());
        if (it == fill.text_rows.end()) {
            throw std::invalid_argument("missing fill row for masked separator");
        }
        check_row(it->second, vocab.text_classes());
    }
    for (int slot = 0; slot < lay.span_len; ++slot) {
        if (state.span_mask[slot]) {
            auto it = fill.span_rows.find(slot);
            if (it == fill.span_rows.end()) {
                throw std::invalid_argument("missing fill row for masked slot " +
                                            std::to_string(slot));
            }
            for (int p = 0; p < kNumParts; ++p) {
                check_row(it->second[p], vocab.sign_classes());
            }
        }
    }

    MaskState next = state;
    next.t = s;
    const double survive = s / state.t;
    CounterRng rng(rng_seed);
    CounterRng text_rng = rng.split(1);
    CounterRng span_rng = rng.split(2);

    for (int i = 0; i < lay.text_len; ++i) {
        if (!state.text_mask[i]) {
            continue;
        }
        if (text_rng.next_double() < survive) {
            continue;
        }
        const auto& row = fill.text_rows.at(i);
        next.seq.text[i] = vocab.text_id_of(sample_categorical(row, text_rng.next_double()));
        next.text_mask[i] = 0;
    }
    if (state.sep_mask) {
        // the separator's value is pinned to eos by the layout; only the flag flips
        if (!(text_rng.next_double() < survive)) {
            next.sep_mask = 0;
        }
    }
    for (int slot = 0; slot < lay.span_len; ++slot) {
        if (!state.span_mask[slot]) {
            continue;
        }
        if (span_rng.next_double() < survive) {
            continue;
        }
        const auto& rows = fill.span_rows.at(slot);
        for (int p = 0; p < kNumParts; ++p) {
            next.seq.span[p][slot] =
                vocab.sign_id_of(sample_categorical(rows[p], span_rng.next_double()));
        }
        next.span_mask[slot] = 0;
    }
    return next;
}

FillDist oracle_fill_dist(const MaskState& state, const PaddedSequence& truth,
                          const VocabSpec& vocab) {
    if (truth.text_len() != state.seq.text_len() || truth.span_len() != state.seq.span_len()) {
        throw std::invalid_argument("truth layout does not match state");
    }
    FillDist fill;
    const Layout lay = state.layout();
    for (int i = 0; i < lay.text_len; ++i) {
        if (!state.text_mask[i]) {
            continue;
        }
        std::vector<double> row(vocab.text_classes(), 0.0);
        row[vocab.text_class_of(truth.text[i])] = 1.0;
        fill.text_rows.emplace(i, std::move(row));
    }
    if (state.sep_mask) {
        std::vector<double> row(vocab.text_classes(), 0.0);
        row[vocab.text_class_of(vocab.eos_id())] = 1.0;
        fill.text_rows.emplace(lay.sep_pos(), std::move(row));
    }
    for (int slot = 0; slot < lay.span_len; ++slot) {
        if (!state.span_mask[slot]) {
            continue;
        }
        std::array<std::vector<double>, kNumParts> rows;
        for (int p = 0; p < kNumParts; ++p) {
            rows[p].assign(vocab.sign_classes(), 0.0);
            rows[p][vocab.sign_class_of(truth.span[p][slot])] = 1.0;
        }
        fill.span_rows.emplace(slot, std::move(rows));
    }
    return fill;
}

}  // namespace signdiff
