#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace signdiff {

inline constexpr int kNumParts = 3;

enum class Part : int { body = 0, left = 1, right = 2 };

inline const char* part_name(int p) {
    static const char* names[kNumParts] = {"body", "left", "right"};
    return names[p];
}

// Token id plan:
//   text ids          0 .. text_vocab-1
//   sign ids (1-based) 1 .. sign_vocab, shared range across the three parts
//   eos_id, mask_id   reserved, outside both ranges
struct VocabSpec {
    int text_vocab = 0;
    int sign_vocab = 0;  // codes per part

    int eos_id() const { return std::max(text_vocab, sign_vocab + 1); }
    int mask_id() const { return eos_id() + 1; }

    // Head class layouts. The extra class in each head is eos, so the model
    // can place the end marker anywhere in the generated span.
    int text_classes() const { return text_vocab + 1; }
    int sign_classes() const { return sign_vocab + 1; }

    int text_class_of(int id) const;  // token id -> class index
    int sign_class_of(int id) const;
    int text_id_of(int cls) const;  // class index -> token id
    int sign_id_of(int cls) const;

    bool is_valid_text(int id) const { return id >= 0 && id < text_vocab; }
    bool is_valid_sign(int id) const { return id >= 1 && id <= sign_vocab; }

    void validate() const;  // throws on a malformed spec
};

// Unpadded sample: text tokens plus three aligned part streams.
// Flattened layout is cat(text, eos, span, eos) with one position per
// part triple, total text_len + sign_len + 2.
struct TokenSequence {
    std::vector<int> text;
    std::array<std::vector<int>, kNumParts> sign;

    int text_len() const { return static_cast<int>(text.size()); }
    int sign_len() const { return static_cast<int>(sign[0].size()); }
    int flat_len() const { return text_len() + sign_len() + 2; }

    void validate(const VocabSpec& vocab) const;  // part lengths equal, ids in range
    bool operator==(const TokenSequence& o) const { return text == o.text && sign == o.sign; }
};

// Geometry of the flattened layout: [text][sep eos][span slots].
// The span covers the sign triples, the terminator eos, and any padding,
// one flat position per slot.
struct Layout {
    int text_len = 0;
    int span_len = 0;

    int total() const { return text_len + 1 + span_len; }
    int sep_pos() const { return text_len; }
    bool is_text(int pos) const { return pos >= 0 && pos < text_len; }
    bool is_sep(int pos) const { return pos == text_len; }
    bool is_span(int pos) const { return pos > text_len && pos < total(); }
    int slot_of(int pos) const { return pos - text_len - 1; }
    int pos_of_slot(int slot) const { return text_len + 1 + slot; }
};

// Sequence padded to a fixed span budget. Slots beyond the real sign tokens
// hold eos in every part (the first of them is the end marker).
struct PaddedSequence {
    std::vector<int> text;
    std::array<std::vector<int>, kNumParts> span;
    int real_len = 0;  // leading slots holding actual sign triples

    int text_len() const { return static_cast<int>(text.size()); }
    int span_len() const { return static_cast<int>(span[0].size()); }
    Layout layout() const { return Layout{text_len(), span_len()}; }

    // a slot counts as an end marker when any part carries eos; sampled
    // fills may mix eos with real ids and such slots embed as eos
    bool slot_is_eos(int slot, const VocabSpec& vocab) const {
        for (int p = 0; p < kNumParts; ++p) {
            if (span[p][slot] == vocab.eos_id()) {
                return true;
            }
        }
        return false;
    }
    bool operator==(const PaddedSequence& o) const {
        return text == o.text && span == o.span && real_len == o.real_len;
    }
};

// Pads to span_budget slots; requires sign_len <= span_budget.
PaddedSequence pad_sequence(const TokenSequence& seq, int span_budget, const VocabSpec& vocab);

// Drops everything at and after the first slot containing eos in any part.
TokenSequence truncate_at_eos(const PaddedSequence& seq, const VocabSpec& vocab);

enum class MaskMode { pretrain, finetune };

// A padded sequence plus per-position masked flags. Masked positions hold
// mask_id (all three parts of a slot share one flag).
struct MaskState {
    PaddedSequence seq;
    std::vector<uint8_t> text_mask;
    uint8_t sep_mask = 0;
    std::vector<uint8_t> span_mask;
    double t = 0.0;
    MaskMode mode = MaskMode::pretrain;

    Layout layout() const { return seq.layout(); }
    bool pos_masked(int pos) const;
    int masked_count() const;
    std::vector<int> masked_positions() const;  // ascending flat positions

    bool operator==(const MaskState& o) const {
        return seq == o.seq && text_mask == o.text_mask && sep_mask == o.sep_mask &&
               span_mask == o.span_mask && t == o.t && mode == o.mode;
    }
};

}  // namespace signdiff
