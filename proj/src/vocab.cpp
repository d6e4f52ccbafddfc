#include "signdiff/vocab.hpp"

#include <stdexcept>
#include <string>

namespace signdiff {

int VocabSpec::text_class_of(int id) const {
    if (id == eos_id()) {
        return text_vocab;
    }
    if (!is_valid_text(id)) {
        throw std::invalid_argument("text token id out of range: " + std::to_string(id));
    }
    return id;
}

int VocabSpec::sign_class_of(int id) const {
    if (id == eos_id()) {
        return sign_vocab;
    }
    if (!is_valid_sign(id)) {
        throw std::invalid_argument("sign token id out of range: " + std::to_string(id));
    }
    return id - 1;
}

int VocabSpec::text_id_of(int cls) const {
    if (cls < 0 || cls > text_vocab) {
        throw std::invalid_argument("text class out of range");
    }
    return cls == text_vocab ? eos_id() : cls;
}

int VocabSpec::sign_id_of(int cls) const {
    if (cls < 0 || cls > sign_vocab) {
        throw std::invalid_argument("sign class out of range");
    }
    return cls == sign_vocab ? eos_id() : cls + 1;
}

void VocabSpec::validate() const {
    if (text_vocab < 1) {
        throw std::invalid_argument("text vocab must be positive");
    }
    if (sign_vocab < 2) {
        throw std::invalid_argument("sign vocab must hold at least 2 codes");
    }
    if (eos_id() == mask_id()) {
        throw std::invalid_argument("eos and mask ids must differ");
    }
    if (is_valid_text(eos_id()) || is_valid_sign(eos_id()) || is_valid_text(mask_id()) ||
        is_valid_sign(mask_id())) {
        throw std::invalid_argument("reserved ids overlap a vocab range");
    }
}

void TokenSequence::validate(const VocabSpec& vocab) const {
    const size_t len = sign[0].size();
    for (int p = 1; p < kNumParts; ++p) {
        if (sign[p].size() != len) {
            throw std::invalid_argument("part streams differ in length");
        }
    }
    for (int tok : text) {
        if (!vocab.is_valid_text(tok)) {
            throw std::invalid_argument("text token out of range");
        }
    }
    for (const auto& stream : sign) {
        for (int tok : stream) {
            if (!vocab.is_valid_sign(tok)) {
                throw std::invalid_argument("sign token out of range");
            }
        }
    }
}

PaddedSequence pad_sequence(const TokenSequence& seq, int span_budget, const VocabSpec& vocab) {
    if (seq.sign_len() > span_budget) {
        throw std::invalid_argument("sequence longer than span budget");
    }
    PaddedSequence out;
    out.text = seq.text;
    out.real_len = seq.sign_len();
    for (int p = 0; p < kNumParts; ++p) {
        out.span[p] = seq.sign[p];
        out.span[p].resize(span_budget, vocab.eos_id());
    }
    return out;
}

TokenSequence truncate_at_eos(const PaddedSequence& seq, const VocabSpec& vocab) {
    int cut = seq.span_len();
    for (int slot = 0; slot < seq.span_len(); ++slot) {
        bool has_eos = false;
        for (int p = 0; p < kNumParts; ++p) {
            if (seq.span[p][slot] == vocab.eos_id()) {
                has_eos = true;
            }
        }
        if (has_eos) {
            cut = slot;
            break;
        }
    }
    TokenSequence out;
    out.text = seq.text;
    for (int p = 0; p < kNumParts; ++p) {
        out.sign[p].assign(seq.span[p].begin(), seq.span[p].begin() + cut);
    }
    return out;
}

bool MaskState::pos_masked(int pos) const {
    const Layout lay = layout();
    if (lay.is_text(pos)) {
        return text_mask[pos] != 0;
    }
    if (lay.is_sep(pos)) {
        return sep_mask != 0;
    }
    return span_mask[lay.slot_of(pos)] != 0;
}

int MaskState::masked_count() const {
    int n = sep_mask != 0 ? 1 : 0;
    for (uint8_t f : text_mask) {
        n += f != 0;
    }
    for (uint8_t f : span_mask) {
        n += f != 0;
    }
    return n;
}

std::vector<int> MaskState::masked_positions() const {
    std::vector<int> out;
    const Layout lay = layout();
    for (int pos = 0; pos < lay.total(); ++pos) {
        if (pos_masked(pos)) {
            out.push_back(pos);
        }
    }
    return out;
}

}  // namespace signdiff
