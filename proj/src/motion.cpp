#include "signdiff/motion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace signdiff {

std::vector<int> MotionSequence::part_columns(int part) const {
    std::vector<int> cols(part_dim());
    for (int c = 0; c < part_dim(); ++c) {
        cols[c] = part_offset(part) + c;
    }
    return cols;
}

void MotionConfig::validate() const {
    if (dims < kNumParts || dims % kNumParts != 0) {
        throw std::invalid_argument("motion dims must be a positive multiple of 3");
    }
    if (lexicon_size < 50) {
        throw std::invalid_argument("lexicon must hold at least 50 templates");
    }
    if (min_signs < 1 || max_signs < min_signs) {
        throw std::invalid_argument("invalid sign count range");
    }
    if (min_sign_frames < 4 || min_sign_frames % 4 != 0 || max_sign_frames % 4 != 0 ||
        max_sign_frames < min_sign_frames) {
        throw std::invalid_argument("sign frame range must be multiples of 4");
    }
    if (max_signs * max_sign_frames > max_frames) {
        throw std::invalid_argument("sign composition can exceed the frame budget");
    }
}

double SignTemplate::value(int part, int column, int frame) const {
    if (!active[part]) {
        return 0.0;  // rest pose
    }
    const double phase_unit =
        2.0 * std::numbers::pi * static_cast<double>(frame) / static_cast<double>(frames);
    double v = 0.0;
    for (const Wave& w : waves[part][column]) {
        v += w.amp * std::sin(w.cycles * phase_unit + w.phase);
    }
    return v;
}

Lexicon Lexicon::build(const MotionConfig& config, uint64_t seed) {
    config.validate();
    Lexicon lex;
    lex.config = config;
    const int part_dim = config.dims / kNumParts;
    CounterRng root = CounterRng(seed).split(101);
    for (int id = 0; id < config.lexicon_size; ++id) {
        CounterRng rng = root.split(static_cast<uint64_t>(id));
        SignTemplate tpl;
        const int frame_choices = (config.max_sign_frames - config.min_sign_frames) / 4 + 1;
        tpl.frames = config.min_sign_frames + 4 * static_cast<int>(rng.next_below(frame_choices));
        if (rng.next_double() < config.single_hand_fraction) {
            // body stays active; one hand rests
            const bool drop_left = rng.next_double() < 0.5;
            tpl.active[static_cast<int>(drop_left ? Part::left : Part::right)] = false;
        }
        tpl.waves.assign(kNumParts, std::vector<std::array<SignTemplate::Wave, 3>>(part_dim));
        for (int p = 0; p < kNumParts; ++p) {
            for (int c = 0; c < part_dim; ++c) {
                const int n_waves = 1 + static_cast<int>(rng.next_below(3));
                for (int w = 0; w < 3; ++w) {
                    SignTemplate::Wave wave;
                    if (w < n_waves) {
                        wave.amp = rng.next_range(0.2, 1.0);
                        wave.cycles = static_cast<double>(1 + rng.next_below(4));
                        wave.phase = rng.next_range(0.0, 2.0 * std::numbers::pi);
                    }
                    tpl.waves[p][c][w] = wave;
                }
            }
        }
        lex.templates.push_back(std::move(tpl));
    }
    return lex;
}

Sample gen_synthetic_pair(const Lexicon& lexicon, CounterRng& rng) {
    const MotionConfig& cfg = lexicon.config;
    const int n_signs =
        cfg.min_signs + static_cast<int>(rng.next_below(cfg.max_signs - cfg.min_signs + 1));
    Sample sample;
    int total_frames = 0;
    std::vector<int> ids;
    for (int i = 0; i < n_signs; ++i) {
        const int id = static_cast<int>(rng.next_below(lexicon.templates.size()));
        if (total_frames + lexicon.templates[id].frames > cfg.max_frames) {
            break;  // frame budget caps the composition
        }
        ids.push_back(id);
        total_frames += lexicon.templates[id].frames;
    }
    sample.text = ids;
    sample.motion.frames = Matrix(total_frames, cfg.dims);
    const int part_dim = cfg.dims / kNumParts;
    int frame0 = 0;
    for (int id : ids) {
        const SignTemplate& tpl = lexicon.templates[id];
        for (int f = 0; f < tpl.frames; ++f) {
            double* row = sample.motion.frames.row(frame0 + f);
            for (int p = 0; p < kNumParts; ++p) {
                for (int c = 0; c < part_dim; ++c) {
                    row[p * part_dim + c] = tpl.value(p, c, f);
                }
            }
        }
        frame0 += tpl.frames;
    }
    return sample;
}

std::vector<Sample> gen_synthetic_pairs(int n, uint64_t seed, const MotionConfig& config) {
    if (n < 1) {
        throw std::invalid_argument("sample count must be positive");
    }
    const Lexicon lexicon = Lexicon::build(config, seed);
    std::vector<Sample> out;
    out.reserve(n);
    CounterRng root = CounterRng(seed).split(202);
    for (int i = 0; i < n; ++i) {
        CounterRng rng = root.split(static_cast<uint64_t>(i));
        out.push_back(gen_synthetic_pair(lexicon, rng));
    }
    return out;
}

}  // namespace signdiff
