#pragma once

#include <array>
#include <optional>
#include <vector>

#include "signdiff/codebook.hpp"
#include "signdiff/model.hpp"
#include "signdiff/vocab.hpp"

namespace signdiff {

enum class Phase { pretrain, finetune };

// smoothed L1 with the quadratic/linear switch at |r| = 1
double smooth_l1(double residual);
double smooth_l1_grad(double residual);

// (1/t) * sum of -log p(truth) over masked rows. rows[i] is the categorical
// predicted for masked index i; truth_classes[i] its target class.
// t = 0 with masked rows present is rejected.
double loss_tok(const std::vector<std::vector<double>>& rows,
                const std::vector<int>& truth_classes, double t);

// Per-part smoothed L1 between mapped hidden states and the code embeddings
// of the truth ids; mean over elements, summed over parts.
double loss_lat(const std::vector<std::vector<double>>& hidden,
                const std::array<SeqModel::LatentHead, kNumParts>& heads,
                const std::array<Codebook, kNumParts>& books,
                const std::array<std::vector<int>, kNumParts>& truth_ids);

// Same, but decoded through the frozen part decoders and compared against
// the ground-truth 4-frame windows.
double loss_phy(const std::vector<std::vector<double>>& hidden,
                const std::array<SeqModel::LatentHead, kNumParts>& heads,
                const std::array<Codebook, kNumParts>& books,
                const std::array<std::vector<std::vector<double>>, kNumParts>& truth_windows);

double loss_combined(double tok, double lat, double phy, Phase phase, double alpha);

struct LossReport {
    double tok = 0.0;
    double lat = 0.0;
    double phy = 0.0;
    double total = 0.0;
    double t = 0.0;
    int masked_text = 0;
    int masked_sign = 0;
};

struct LossOptions {
    Phase phase = Phase::pretrain;
    double alpha = 0.5;
    bool with_tok = true;
    bool with_lat = true;
    bool with_phy = true;
};

// Full per-sequence objective on one masked state: token cross-entropy over
// every masked position, latent and physical terms over masked real sign
// slots. truth_frames (the source motion) is required while with_phy holds.
// When tape is non-null the exact gradient of the combined loss is
// accumulated into it.
LossReport compute_losses(const SeqModel& model, const MaskState& state,
                          const PaddedSequence& truth, const Matrix* truth_frames,
                          const LossOptions& options, GradTape* tape);

}  // namespace signdiff
