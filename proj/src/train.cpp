#include "signdiff/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "signdiff/errors.hpp"
#include "signdiff/metrics.hpp"

namespace signdiff {

TrainSample make_train_sample(const Sample& sample, const std::array<Codebook, kNumParts>& books) {
    TrainSample out;
    out.tokens.text = sample.text;
    out.tokens.sign = tokenize(sample.motion, books);
    out.frames = sample.motion.frames;
    return out;
}

std::vector<TrainSample> make_train_samples(const std::vector<Sample>& samples,
                                            const std::array<Codebook, kNumParts>& books) {
    std::vector<TrainSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(make_train_sample(s, books));
    }
    return out;
}

MaskState utc_training_state(const PaddedSequence& padded, double t, uint64_t rng_seed,
                             const VocabSpec& vocab) {
    const int M = padded.span_len();
    MaskState state = forward_mask(padded, 1.0, MaskMode::finetune, rng_seed, vocab);
    state.t = t;
    for (int slot : training_index_filter(M, t, rng_seed)) {
        state.span_mask[slot] = 0;
        for (int p = 0; p < kNumParts; ++p) {
            state.seq.span[p][slot] = padded.span[p][slot];
        }
    }
    return state;
}

TrainResult train_model(SeqModel& model, const std::vector<TrainSample>& samples,
                        const TrainOptions& options, std::ostream* log) {
    if (samples.empty()) {
        throw DataError("no training samples");
    }
    if (options.span_budget < 1) {
        throw ConfigError("span budget must be positive");
    }
    const VocabSpec& vocab = model.cfg.vocab;

    // pad once; the span budget is shared by every sequence
    std::vector<PaddedSequence> padded;
    padded.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.tokens.sign_len() > options.span_budget) {
            throw DataError("sample longer than the span budget");
        }
        padded.push_back(pad_sequence(s.tokens, options.span_budget, vocab));
    }

    LossOptions loss_opt;
    loss_opt.phase = options.phase;
    loss_opt.alpha = options.alpha;
    loss_opt.with_tok = options.with_tok;
    loss_opt.with_lat = options.with_lat;
    loss_opt.with_phy = options.with_phy;

    const int n = static_cast<int>(samples.size());
    const int steps_per_epoch = (n + options.batch_size - 1) / options.batch_size;
    const int total_steps = std::max(1, options.epochs * steps_per_epoch);

    CounterRng root = CounterRng(options.seed).split(606);
    TrainResult result;
    auto params = model.params();
    int step = 0;

    if (log != nullptr) {
        *log << "# epoch step t l_tok l_lat l_phy l_total\n";
        *log << "# phase=" << (options.phase == Phase::pretrain ? "pretrain" : "finetune")
             << " variant=" << variant_name(options.variant)
             << " latphy_reduction=mean_over_masked_indices\n";
    }

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        CounterRng epoch_rng = root.split(static_cast<uint64_t>(epoch));
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) {
            order[i] = i;
        }
        epoch_rng.shuffle(order);

        EpochStats stats;
        stats.epoch = epoch;
        int counted = 0;

        for (int b = 0; b < steps_per_epoch; ++b) {
            const int begin = b * options.batch_size;
            const int end = std::min(n, begin + options.batch_size);
            if (begin >= end) {
                break;
            }
            CounterRng batch_rng = epoch_rng.split(1000 + static_cast<uint64_t>(b));
            const double t = batch_rng.next_double();

            GradTape batch_tape;
            double batch_tok = 0.0, batch_lat = 0.0, batch_phy = 0.0, batch_total = 0.0;
            for (int i = begin; i < end; ++i) {
                const int idx = order[i];
                const uint64_t mask_seed = batch_rng.split(static_cast<uint64_t>(idx)).next_u64();
                MaskState state;
                if (options.phase == Phase::pretrain) {
                    state = forward_mask(padded[idx], t, MaskMode::pretrain, mask_seed, vocab);
                } else if (options.variant == ScheduleVariant::utc) {
                    state = utc_training_state(padded[idx], t, mask_seed, vocab);
                } else {
                    state = forward_mask(padded[idx], t, MaskMode::finetune, mask_seed, vocab);
                }
                if (options.phase == Phase::finetune) {
                    // contract: conditioning text is never masked here
                    for (uint8_t flag : state.text_mask) {
                        if (flag) {
                            throw NumericalError("text masked during fine-tuning");
                        }
                    }
                }
                GradTape tape;
                const LossReport report =
                    compute_losses(model, state, padded[idx], &samples[idx].frames, loss_opt,
                                   &tape);
                if (!std::isfinite(report.total)) {
                    throw NumericalError("loss diverged");
                }
                batch_tape.accumulate(tape);
                batch_tok += report.tok;
                batch_lat += report.lat;
                batch_phy += report.phy;
                batch_total += report.total;
            }
            const int batch_n = end - begin;
            batch_tape.scale(1.0 / batch_n);

            const double norm = std::sqrt(batch_tape.squared_norm());
            if (!std::isfinite(norm)) {
                throw NumericalError("gradient diverged");
            }
            if (options.grad_clip > 0.0 && norm > options.grad_clip) {
                batch_tape.scale(options.grad_clip / norm);
            }

            const double lr =
                options.lr0 * 0.5 *
                (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
            for (Tensor* param : params) {
                const auto* grad = batch_tape.find(param->name);
                if (grad == nullptr) {
                    continue;
                }
                for (size_t i = 0; i < param->data.size(); ++i) {
                    param->data[i] -= lr * (*grad)[i];
                }
            }
            result.final_lr = lr;
            ++step;

            stats.tok += batch_tok;
            stats.lat += batch_lat;
            stats.phy += batch_phy;
            stats.total += batch_total;
            counted += batch_n;

            if (log != nullptr) {
                *log << epoch << " " << step << " " << t << " " << batch_tok / batch_n << " "
                     << batch_lat / batch_n << " " << batch_phy / batch_n << " "
                     << batch_total / batch_n << "\n";
            }
        }

        stats.tok /= counted;
        stats.lat /= counted;
        stats.phy /= counted;
        stats.total /= counted;
        result.history.push_back(stats);
    }
    return result;
}

double eval_token_loss(const SeqModel& model, const std::vector<TrainSample>& samples,
                       int span_budget, uint64_t seed) {
    const VocabSpec& vocab = model.cfg.vocab;
    const double grid[] = {0.1, 0.3, 0.5, 0.7, 0.9};
    LossOptions opt;
    opt.phase = Phase::finetune;
    opt.with_lat = false;
    opt.with_phy = false;

    double acc = 0.0;
    int counted = 0;
    CounterRng root = CounterRng(seed).split(707);
    for (size_t i = 0; i < samples.size(); ++i) {
        const PaddedSequence padded = pad_sequence(samples[i].tokens, span_budget, vocab);
        for (size_t g = 0; g < std::size(grid); ++g) {
            const uint64_t mask_seed = root.split(i * 16 + g).next_u64();
            const MaskState state =
                forward_mask(padded, grid[g], MaskMode::finetune, mask_seed, vocab);
            const LossReport report = compute_losses(model, state, padded, nullptr, opt, nullptr);
            acc += report.tok;
            ++counted;
        }
    }
    return acc / counted;
}

double eval_sibleu(const SeqModel& model, const std::vector<TrainSample>& samples,
                   const UnmaskSchedule& schedule, uint64_t seed, int rounds) {
    std::vector<TokenSequence> hyps;
    std::vector<TokenSequence> refs;
    CounterRng root = CounterRng(seed).split(808);
    for (size_t i = 0; i < samples.size(); ++i) {
        for (int round = 0; round < rounds; ++round) {
            hyps.push_back(generate(model, samples[i].tokens.text, schedule,
                                    root.split(i * 97 + round).next_u64()));
            refs.push_back(samples[i].tokens);
        }
    }
    const SiBleuReport report = sibleu_corpus(hyps, refs);
    return 0.5 * (report.body + report.hands);
}

}  // namespace signdiff
