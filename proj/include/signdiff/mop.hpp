#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "signdiff/codebook.hpp"
#include "signdiff/tensor.hpp"

namespace signdiff {

enum class MoPVariant { dense, simple_avg, top1, top2 };

MoPVariant parse_mop_variant(const std::string& name);
const char* mop_variant_name(MoPVariant v);

// Gated fusion of the three part-wise code embeddings. Each part's code is
// projected to model width by its own FC layer; gate weights come from a
// small MLP over the concatenated codes followed by a softmax. The
// simple-average and sparse top-k variants exist for ablations.
struct MoPParams {
    int code_dim = 0;
    int model_dim = 0;
    int gate_hidden = 0;  // 2 * code_dim

    std::array<Tensor, kNumParts> fc_weight;  // model_dim x code_dim
    std::array<Tensor, kNumParts> fc_bias;    // model_dim
    Tensor gate_w1;                           // gate_hidden x 3*code_dim
    Tensor gate_b1;                           // gate_hidden
    Tensor gate_w2;                           // 3 x gate_hidden
    Tensor gate_b2;                           // 3

    // fan-in uniform projections; gate output layer zeroed so gating
    // starts exactly uniform
    void init(int code_dim_in, int model_dim_in, CounterRng& rng);
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
};

struct MoPForward {
    std::array<int, kNumParts> ids{};
    std::array<std::vector<double>, kNumParts> codes;
    std::array<std::vector<double>, kNumParts> proj;  // FC_p(c_p)
    std::vector<double> gate_input;                   // cat(codes)
    std::vector<double> gate_hidden;                  // tanh layer
    std::array<double, kNumParts> gate_logits{};
    std::array<double, kNumParts> gates{};      // after softmax (+ sparsification)
    std::array<double, kNumParts> soft_gates{}; // dense softmax, kept for backward
    MoPVariant variant = MoPVariant::dense;
    std::vector<double> out;  // model_dim
};

MoPForward mop_embed(const std::array<int, kNumParts>& part_ids,
                     const std::array<Codebook, kNumParts>& books, const MoPParams& params);

// Mean of the three projections; no gate.
std::vector<double> avg_embed(const std::array<int, kNumParts>& part_ids,
                              const std::array<Codebook, kNumParts>& books,
                              const MoPParams& params);

// Keeps the top_k gates, renormalized to sum 1.
MoPForward sparse_embed(const std::array<int, kNumParts>& part_ids,
                        const std::array<Codebook, kNumParts>& books, const MoPParams& params,
                        int top_k);

// Runs the variant the params were configured for.
MoPForward mop_embed_variant(const std::array<int, kNumParts>& part_ids,
                             const std::array<Codebook, kNumParts>& books, const MoPParams& params,
                             MoPVariant variant);

// Exact gradients of the gated fusion. Parameter gradients accumulate into
// the tape; code gradients land in code_grads when given (codebooks are
// frozen inputs during training but the derivative is exposed for checks).
void mop_backward(const std::vector<double>& upstream, const MoPForward& fwd,
                  const MoPParams& params, GradTape& tape,
                  std::array<std::vector<double>, kNumParts>* code_grads = nullptr);

}  // namespace signdiff
