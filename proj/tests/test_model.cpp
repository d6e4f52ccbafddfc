#include <cmath>

#include "doctest.h"
#include "signdiff/model.hpp"
#include "signdiff/motion.hpp"

using namespace signdiff;

namespace {

struct Fixture {
    std::array<Codebook, kNumParts> books;
    SeqModel model;
    VocabSpec vocab;

    explicit Fixture(uint64_t seed, Direction dir = Direction::bidirectional, int model_dim = 16,
                     int blocks = 2, int n_codes = 8, int code_dim = 4) {
        MotionConfig mcfg;
        mcfg.min_signs = 2;
        mcfg.max_signs = 3;
        std::vector<MotionSequence> motions;
        for (auto& s : gen_synthetic_pairs(10, seed, mcfg)) {
            motions.push_back(std::move(s.motion));
        }
        books = fit_codebooks(motions, n_codes, code_dim, 8, seed);
        vocab = VocabSpec{12, n_codes};
        ModelConfig cfg;
        cfg.vocab = vocab;
        cfg.model_dim = model_dim;
        cfg.blocks = blocks;
        cfg.max_len = 64;
        cfg.code_dim = code_dim;
        cfg.direction = dir;
        model.init(cfg, seed);
        model.set_codebooks(books);
    }

    TokenSequence random_sequence(int text_len, int sign_len, uint64_t seed) const {
        CounterRng rng(seed);
        TokenSequence seq;
        for (int i = 0; i < text_len; ++i) {
            seq.text.push_back(static_cast<int>(rng.next_below(vocab.text_vocab)));
        }
        for (int p = 0; p < kNumParts; ++p) {
            for (int i = 0; i < sign_len; ++i) {
                seq.sign[p].push_back(1 + static_cast<int>(rng.next_below(vocab.sign_vocab)));
            }
        }
        return seq;
    }
};

double row_delta(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

}  // namespace

TEST_CASE("predict returns normalized rows at masked positions only") {
    Fixture fx(1);
    const TokenSequence seq = fx.random_sequence(4, 6, 5);
    const PaddedSequence padded = pad_sequence(seq, 10, fx.vocab);
    const MaskState state = forward_mask(padded, 0.5, MaskMode::pretrain, 9, fx.vocab);
    const FillDist fill = predict(fx.model, state);

    int masked = 0;
    for (const auto& [pos, row] : fill.text_rows) {
        CHECK(state.pos_masked(pos));
        double sum = 0.0;
        for (double v : row) {
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
        ++masked;
    }
    for (const auto& [slot, rows] : fill.span_rows) {
        CHECK(state.span_mask[slot]);
        for (int p = 0; p < kNumParts; ++p) {
            double sum = 0.0;
            for (double v : rows[p]) {
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
        ++masked;
    }
    CHECK(masked == state.masked_count());
}

TEST_CASE("sequence beyond max_len is rejected") {
    Fixture fx(2);
    const TokenSequence seq = fx.random_sequence(4, 6, 5);
    const PaddedSequence padded = pad_sequence(seq, 128, fx.vocab);
    const MaskState state = forward_mask(padded, 0.5, MaskMode::finetune, 9, fx.vocab);
    CHECK_THROWS(predict(fx.model, state));
}

TEST_CASE("bidirectional predictions react to later context") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Fixture fx(100 + seed);
        TokenSequence seq = fx.random_sequence(3, 8, seed);
        const PaddedSequence padded = pad_sequence(seq, 9, fx.vocab);
        MaskState state = forward_mask(padded, 0.0, MaskMode::finetune, 1, fx.vocab);
        // mask slot 2 by hand, then flip the token at slot 5
        state.span_mask[2] = 1;
        for (int p = 0; p < kNumParts; ++p) {
            state.seq.span[p][2] = fx.vocab.mask_id();
        }
        MaskState other = state;
        other.seq.span[0][5] = other.seq.span[0][5] == 1 ? 2 : 1;

        const FillDist a = predict(fx.model, state);
        const FillDist b = predict(fx.model, other);
        double delta = 0.0;
        for (int p = 0; p < kNumParts; ++p) {
            delta = std::max(delta, row_delta(a.span_rows.at(2)[p], b.span_rows.at(2)[p]));
        }
        CHECK(delta > 1e-12);
    }
}

TEST_CASE("causal predictions ignore later context") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Fixture fx(200 + seed, Direction::causal);
        TokenSequence seq = fx.random_sequence(3, 8, seed);
        const PaddedSequence padded = pad_sequence(seq, 9, fx.vocab);
        MaskState state = forward_mask(padded, 0.0, MaskMode::finetune, 1, fx.vocab);
        state.span_mask[2] = 1;
        for (int p = 0; p < kNumParts; ++p) {
            state.seq.span[p][2] = fx.vocab.mask_id();
        }
        MaskState other = state;
        other.seq.span[0][5] = other.seq.span[0][5] == 1 ? 2 : 1;

        const FillDist a = predict(fx.model, state);
        const FillDist b = predict(fx.model, other);
        for (int p = 0; p < kNumParts; ++p) {
            CHECK(row_delta(a.span_rows.at(2)[p], b.span_rows.at(2)[p]) == 0.0);
        }
        // and an earlier flip does change it
        MaskState earlier = state;
        earlier.seq.span[0][0] = earlier.seq.span[0][0] == 1 ? 2 : 1;
        const FillDist c = predict(fx.model, earlier);
        double delta = 0.0;
        for (int p = 0; p < kNumParts; ++p) {
            delta = std::max(delta, row_delta(a.span_rows.at(2)[p], c.span_rows.at(2)[p]));
        }
        CHECK(delta > 1e-12);
    }
}

TEST_CASE("oracle generation recovers the truth under every schedule") {
    Fixture fx(3);
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const TokenSequence truth = fx.random_sequence(3, 7, 40 + seed);
        const int M = 12;
        const PaddedSequence padded = pad_sequence(truth, M, fx.vocab);
        const PredictorFn oracle = oracle_predictor(padded, fx.vocab);
        for (ScheduleVariant variant : {ScheduleVariant::plain, ScheduleVariant::utc}) {
            for (int k : {1, 2, 4, M}) {
                const UnmaskSchedule sched = build_schedule(M, k, variant);
                const TokenSequence out =
                    generate_with(oracle, truth.text, sched, seed * 13 + k, fx.vocab);
                CHECK(out == truth);
            }
        }
    }
}

TEST_CASE("generation is deterministic per seed") {
    Fixture fx(4);
    const UnmaskSchedule sched = build_schedule(10, 3, ScheduleVariant::plain);
    const std::vector<int> text = {1, 2, 3};
    const TokenSequence a = generate(fx.model, text, sched, 77);
    const TokenSequence b = generate(fx.model, text, sched, 77);
    CHECK(a == b);
}

TEST_CASE("call counts follow the schedule arithmetic") {
    Fixture fx(5);
    const std::vector<int> text = {0, 1};

    GenStats stats;
    generate(fx.model, text, build_schedule(12, 12, ScheduleVariant::plain), 1, &stats);
    CHECK(stats.calls == 1);

    generate(fx.model, text, build_schedule(12, 4, ScheduleVariant::plain), 1, &stats);
    CHECK(stats.calls == 3);

    generate(fx.model, text, build_schedule(12, 5, ScheduleVariant::plain), 1, &stats);
    CHECK(stats.calls == 3);
}

TEST_CASE("utc rollouts visit the checkpoint counts exactly") {
    Fixture fx(6);
    const std::vector<int> text = {2, 3};
    for (int M : {8, 12, 16}) {
        for (int k : {1, 3, 4}) {
            const UnmaskSchedule sched = build_schedule(M, k, ScheduleVariant::utc);
            GenStats stats;
            generate(fx.model, text, sched, 5, &stats);
            int stage1_steps = 0;
            int stage2_steps = 0;
            for (const auto& step : sched.steps) {
                stage1_steps += step.stage == 0;
                stage2_steps += step.stage == 1;
            }
            CHECK(stats.unmasked_after_step[stage1_steps - 1] == (M + 3) / 4);
            CHECK(stats.unmasked_after_step[stage1_steps + stage2_steps - 1] == (M + 1) / 2);
            CHECK(stats.unmasked_after_step.back() == M);
        }
    }
}

TEST_CASE("ar_generate counts one call per emitted token") {
    Fixture fx(7, Direction::causal);
    const std::vector<int> text = {1};
    GenStats stats;
    const TokenSequence one = ar_generate(fx.model, text, 1, 1, &stats);
    CHECK(stats.calls == 1);

    const TokenSequence full = ar_generate(fx.model, text, 9, 1, &stats, /*stop_at_eos=*/false);
    CHECK(stats.calls == 9);
    CHECK(full.sign_len() == 9);

    const TokenSequence again = ar_generate(fx.model, text, 9, 1, nullptr, false);
    CHECK(full == again);

    CHECK_THROWS(ar_generate(Fixture(8).model, text, 4, 1));
}

TEST_CASE("zero head gradients give a zero tape") {
    Fixture fx(9);
    const TokenSequence seq = fx.random_sequence(3, 5, 2);
    const PaddedSequence padded = pad_sequence(seq, 6, fx.vocab);
    const MaskState state = forward_mask(padded, 0.6, MaskMode::pretrain, 3, fx.vocab);
    const ForwardCache cache = model_forward(fx.model, state);
    const GradTape tape = predictor_backward(fx.model, cache, HeadGradients{});
    CHECK(tape.all_zero());
}
