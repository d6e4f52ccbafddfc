#pragma once

#include <iosfwd>
#include <vector>

#include "signdiff/model.hpp"
#include "signdiff/motion.hpp"
#include "signdiff/objectives.hpp"
#include "signdiff/schedule.hpp"

namespace signdiff {

struct TrainSample {
    TokenSequence tokens;
    Matrix frames;  // source motion, for the physical loss
};

TrainSample make_train_sample(const Sample& sample, const std::array<Codebook, kNumParts>& books);
std::vector<TrainSample> make_train_samples(const std::vector<Sample>& samples,
                                            const std::array<Codebook, kNumParts>& books);

struct TrainOptions {
    Phase phase = Phase::pretrain;
    ScheduleVariant variant = ScheduleVariant::plain;  // finetune masking source
    int epochs = 50;
    int batch_size = 16;
    double lr0 = 0.05;
    double alpha = 0.5;
    double grad_clip = 5.0;
    bool with_tok = true;
    bool with_lat = true;
    bool with_phy = true;
    int span_budget = 0;  // M
    uint64_t seed = 1;
};

struct EpochStats {
    int epoch = 0;
    double tok = 0.0, lat = 0.0, phy = 0.0, total = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    double final_lr = 0.0;
};

// A finetune-mode masked state whose unmasked set is drawn from the
// checkpointed reachable-state filter at noise level t.
MaskState utc_training_state(const PaddedSequence& padded, double t, uint64_t rng_seed,
                             const VocabSpec& vocab);

// Plain SGD with a cosine-decayed step size. One noise level is drawn per
// batch; gradients are averaged over the batch and clipped by global norm.
// Throws NumericalError when the loss stops being finite.
TrainResult train_model(SeqModel& model, const std::vector<TrainSample>& samples,
                        const TrainOptions& options, std::ostream* log = nullptr);

// Mean masked-token loss over a fixed noise grid with per-sample seeds, so
// two models are compared on identical masked states.
double eval_token_loss(const SeqModel& model, const std::vector<TrainSample>& samples,
                       int span_budget, uint64_t seed);

// Mean of the body and hands corpus scores over generated outputs. Each
// sample is decoded `rounds` times under different seeds to damp fill
// sampling noise.
double eval_sibleu(const SeqModel& model, const std::vector<TrainSample>& samples,
                   const UnmaskSchedule& schedule, uint64_t seed, int rounds = 1);

}  // namespace signdiff
