#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "signdiff/codebook.hpp"
#include "signdiff/diffusion.hpp"
#include "signdiff/linalg.hpp"
#include "signdiff/mop.hpp"
#include "signdiff/schedule.hpp"
#include "signdiff/tensor.hpp"
#include "signdiff/vocab.hpp"

namespace signdiff {

enum class Direction { bidirectional, causal };

struct ModelConfig {
    VocabSpec vocab;
    int model_dim = 64;
    int blocks = 2;
    int max_len = 128;
    int code_dim = 16;
    MoPVariant embed_variant = MoPVariant::dense;
    Direction direction = Direction::bidirectional;
};

// Small sequence model over the [text][eos][span] layout. Mask tokens get a
// dedicated learned embedding, sign slots embed through the gated
// mixture-of-parts layer, and each mixing block adds pooled context back to
// a position-wise linear map through a per-position multiplicative gate
// (the gate starts at 1, i.e. plain additive injection, and is what lets a
// position select the context features it needs). The bidirectional variant
// pools over the whole sequence; the causal variant pools over the prefix
// only, which makes it an autoregressive baseline with the same parameter
// shapes.
struct SeqModel {
    ModelConfig cfg;

    // frozen codebooks backing the sign embeddings; not part of params()
    std::array<Codebook, kNumParts> books;

    Tensor text_table;  // text_vocab x d
    Tensor eos_emb;     // d
    Tensor mask_emb;    // d
    Tensor pos_table;   // max_len x d

    struct MixBlock {
        Tensor w_loc, b_loc;  // d x d, d
        Tensor w_ctx, b_ctx;  // d x d, d
        Tensor w_sel, b_sel;  // d x d, d   context gate
    };
    std::vector<MixBlock> mix_blocks;

    Tensor head_text_w, head_text_b;                      // (text_vocab+1) x d
    std::array<Tensor, kNumParts> head_part_w;            // (sign_vocab+1) x d
    std::array<Tensor, kNumParts> head_part_b;

    MoPParams mop;

    // per-part map from hidden states into codebook space, d -> d -> d_c
    struct LatentHead {
        Tensor w1, b1, w2, b2;
    };
    std::array<LatentHead, kNumParts> latent_heads;

    void init(const ModelConfig& config, uint64_t seed);
    void set_codebooks(const std::array<Codebook, kNumParts>& books_in);
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    Tensor* find_param(const std::string& name);
};

// ---------------------------------------------------------------------------
// forward / backward
// ---------------------------------------------------------------------------

struct EmbedSource {
    enum Kind { text_tok, eos_tok, mask_tok, sign_mop } kind = mask_tok;
    int token = -1;      // text id when kind == text_tok
    int mop_index = -1;  // into ForwardCache::mop_caches when kind == sign_mop
};

struct BlockCache {
    Matrix u;     // position-wise linear output
    Matrix m;     // pooled context per position
    Matrix ctx;   // w_ctx m + b_ctx
    Matrix gate;  // w_sel h_in + b_sel
    Matrix act;   // tanh(z), z = u + ctx .* gate
    Matrix h_out;
};

struct ForwardCache {
    Layout layout;
    std::vector<EmbedSource> embeds;
    std::vector<MoPForward> mop_caches;
    Matrix h0;
    std::vector<BlockCache> blocks;

    const Matrix& final_hidden() const { return blocks.empty() ? h0 : blocks.back().h_out; }
};

ForwardCache model_forward(const SeqModel& model, const MaskState& state);

// Softmax rows at every masked position; span rows carry one categorical per
// part head. The returned structure doubles as the reverse-process fill.
FillDist predict(const SeqModel& model, const MaskState& state);

// Loss gradients entering the backward pass: d(loss)/d(logits) per masked
// head row plus any extra d(loss)/d(hidden) contributions.
struct HeadGradients {
    std::map<int, std::vector<double>> text_dlogits;
    std::map<int, std::array<std::vector<double>, kNumParts>> span_dlogits;
    std::map<int, std::vector<double>> hidden_extra;
};

GradTape predictor_backward(const SeqModel& model, const ForwardCache& cache,
                            const HeadGradients& grads);

// latent head forward/backward, shared by the latent and physical losses
struct LatentForward {
    std::vector<double> input, hidden, out;
};
LatentForward latent_forward(const SeqModel::LatentHead& head, const std::vector<double>& h);
void latent_backward(const SeqModel::LatentHead& head, const LatentForward& fwd,
                     const std::vector<double>& dout, GradTape& tape, std::vector<double>* dinput);

// ---------------------------------------------------------------------------
// generation
// ---------------------------------------------------------------------------

struct GenStats {
    int calls = 0;
    double wall_seconds = 0.0;
    std::vector<int> unmasked_after_step;
};

using PredictorFn = std::function<FillDist(const MaskState&)>;

// Point-mass predictor on a fixed truth, for process tests.
PredictorFn oracle_predictor(const PaddedSequence& truth, const VocabSpec& vocab);

// Iterative unmasking from an all-masked span. Each step queries the
// predictor once, ranks masked candidates by the product of per-part maximum
// probabilities, unmasks the scheduled count and fills them by sampling.
// The result is truncated at the first generated eos.
TokenSequence generate_with(const PredictorFn& predictor, const std::vector<int>& text,
                            const UnmaskSchedule& schedule, uint64_t rng_seed,
                            const VocabSpec& vocab, GenStats* stats = nullptr);

TokenSequence generate(const SeqModel& model, const std::vector<int>& text,
                       const UnmaskSchedule& schedule, uint64_t rng_seed,
                       GenStats* stats = nullptr);

// Left-to-right greedy decoding with the causal baseline; one predictor call
// per emitted slot. With stop_at_eos off the decoder picks the best non-eos
// token instead, for fixed-length benchmarking.
TokenSequence ar_generate(const SeqModel& model, const std::vector<int>& text, int max_tokens,
                          uint64_t rng_seed, GenStats* stats = nullptr, bool stop_at_eos = true);

}  // namespace signdiff
