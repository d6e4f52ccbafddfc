#include <cmath>
#include <sstream>

#include "doctest.h"
#include "signdiff/errors.hpp"
#include "signdiff/train.hpp"

using namespace signdiff;

namespace {

struct Fixture {
    std::array<Codebook, kNumParts> books;
    SeqModel model;
    std::vector<TrainSample> train;
    std::vector<TrainSample> dev;
    static constexpr int kBudget = 12;

    explicit Fixture(uint64_t seed, int n = 40, int model_dim = 24) {
        MotionConfig mcfg;
        mcfg.min_signs = 2;
        mcfg.max_signs = 3;
        mcfg.min_sign_frames = 8;
        mcfg.max_sign_frames = 16;
        mcfg.lexicon_size = 50;
        const auto samples = gen_synthetic_pairs(n + 8, seed, mcfg);
        std::vector<MotionSequence> motions;
        for (const auto& s : samples) {
            motions.push_back(s.motion);
        }
        books = fit_codebooks(motions, 16, 8, 10, seed);
        ModelConfig cfg;
        cfg.vocab = VocabSpec{50, 16};
        cfg.model_dim = model_dim;
        cfg.blocks = 2;
        cfg.max_len = 24;
        cfg.code_dim = 8;
        model.init(cfg, seed);
        model.set_codebooks(books);
        train = make_train_samples({samples.begin(), samples.begin() + n}, books);
        dev = make_train_samples({samples.begin() + n, samples.end()}, books);
    }
};

TrainOptions base_options(Phase phase) {
    TrainOptions opt;
    opt.phase = phase;
    opt.epochs = 2;
    opt.batch_size = 8;
    opt.lr0 = 0.02;
    opt.span_budget = Fixture::kBudget;
    opt.seed = 11;
    return opt;
}

}  // namespace

TEST_CASE("one pretraining epoch stays finite and logs rows") {
    Fixture fx(5, 20);
    TrainOptions opt = base_options(Phase::pretrain);
    opt.epochs = 1;
    std::ostringstream log;
    const TrainResult result = train_model(fx.model, fx.train, opt, &log);
    REQUIRE(result.history.size() == 1);
    CHECK(std::isfinite(result.history[0].total));
    CHECK(result.history[0].tok > 0.0);
    const std::string text = log.str();
    CHECK(text.find("l_tok") != std::string::npos);
    // one line per step plus the two header lines
    const int steps = (20 + opt.batch_size - 1) / opt.batch_size;
    CHECK(std::count(text.begin(), text.end(), '\n') == steps + 2);
}

TEST_CASE("training reduces the token loss") {
    Fixture fx(7, 40);
    TrainOptions opt = base_options(Phase::pretrain);
    opt.epochs = 40;
    opt.lr0 = 0.05;
    const TrainResult result = train_model(fx.model, fx.train, opt, nullptr);
    const double first = result.history.front().tok;
    const double last = result.history.back().tok;
    CHECK(last < 0.8 * first);
}

TEST_CASE("utc training states are always reachable and keep text clear") {
    Fixture fx(9, 12);
    const VocabSpec vocab = fx.model.cfg.vocab;
    for (uint64_t seed = 0; seed < 30; ++seed) {
        const double t = 0.1 + 0.025 * static_cast<double>(seed);
        const PaddedSequence padded =
            pad_sequence(fx.train[seed % fx.train.size()].tokens, Fixture::kBudget, vocab);
        const MaskState state = utc_training_state(padded, t, seed, vocab);
        CHECK(state.t == t);
        std::vector<int> unmasked;
        for (int slot = 0; slot < Fixture::kBudget; ++slot) {
            if (!state.span_mask[slot]) {
                unmasked.push_back(slot);
            }
        }
        CHECK(utc_state_reachable(Fixture::kBudget, unmasked));
        for (uint8_t flag : state.text_mask) {
            CHECK(flag == 0);
        }
        CHECK(state.sep_mask == 0);
    }
}

TEST_CASE("finetune never masks text across every batch") {
    // train_model asserts this internally; a run completing is the check,
    // and the masking path is exercised for both variants
    for (ScheduleVariant variant : {ScheduleVariant::plain, ScheduleVariant::utc}) {
        Fixture fx(13, 16);
        TrainOptions opt = base_options(Phase::finetune);
        opt.variant = variant;
        CHECK_NOTHROW(train_model(fx.model, fx.train, opt, nullptr));
    }
}

TEST_CASE("training is deterministic given the seed") {
    Fixture a(21, 16);
    Fixture b(21, 16);
    TrainOptions opt = base_options(Phase::finetune);
    opt.epochs = 3;
    train_model(a.model, a.train, opt, nullptr);
    train_model(b.model, b.train, opt, nullptr);
    const auto pa = a.model.params();
    const auto pb = b.model.params();
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->data == pb[i]->data);
    }
}

TEST_CASE("frozen codebooks are bit-identical after training") {
    Fixture fx(23, 16);
    const auto before = fx.model.books;
    TrainOptions opt = base_options(Phase::pretrain);
    train_model(fx.model, fx.train, opt, nullptr);
    for (int p = 0; p < kNumParts; ++p) {
        CHECK(fx.model.books[p].codes.data == before[p].codes.data);
        CHECK(fx.model.books[p].dec_weight.data == before[p].dec_weight.data);
        CHECK(fx.model.books[p].dec_bias == before[p].dec_bias);
    }
}

TEST_CASE("ablation switches drop the corresponding loss terms") {
    Fixture fx(27, 12);
    TrainOptions opt = base_options(Phase::pretrain);
    opt.epochs = 1;
    opt.with_lat = false;
    opt.with_phy = false;
    const TrainResult result = train_model(fx.model, fx.train, opt, nullptr);
    CHECK(result.history[0].lat == 0.0);
    CHECK(result.history[0].phy == 0.0);
    CHECK(result.history[0].tok > 0.0);
    CHECK(result.history[0].total == doctest::Approx(result.history[0].tok));
}

namespace {

// 20 motions composed from 6 base sinusoid patterns; structured enough
// that a short descent can fit it
Sample toy_composite(int index) {
    const int frames_per = 12;
    Sample s;
    s.text = {index % 6, (index * 7 + 3) % 6};
    s.motion.frames = Matrix(2 * frames_per, 24);
    for (int half = 0; half < 2; ++half) {
        const int base = s.text[half];
        for (int f = 0; f < frames_per; ++f) {
            for (int c = 0; c < 24; ++c) {
                s.motion.frames.at(half * frames_per + f, c) =
                    std::sin(0.35 * (base + 1) * f + 0.25 * c + base);
            }
        }
    }
    return s;
}

}  // namespace

TEST_CASE("physical loss halves within 200 steps on a toy set") {
    // descent on a frozen batch of masked states isolates the objective's
    // own trainability through the frozen decoder
    std::vector<Sample> samples;
    for (int i = 0; i < 20; ++i) {
        samples.push_back(toy_composite(i));
    }
    std::vector<MotionSequence> motions;
    for (const auto& s : samples) {
        motions.push_back(s.motion);
    }
    const auto books = fit_codebooks(motions, 16, 8, 10, 35);
    ModelConfig cfg;
    cfg.vocab = VocabSpec{6, 16};
    cfg.model_dim = 32;
    cfg.blocks = 2;
    cfg.max_len = 16;
    cfg.code_dim = 8;
    SeqModel model;
    model.init(cfg, 35);
    model.set_codebooks(books);
    const auto train = make_train_samples(samples, books);

    std::vector<PaddedSequence> padded;
    std::vector<MaskState> states;
    for (size_t i = 0; i < train.size(); ++i) {
        padded.push_back(pad_sequence(train[i].tokens, 7, cfg.vocab));
        states.push_back(forward_mask(padded.back(), 0.7, MaskMode::pretrain, 40 + i, cfg.vocab));
    }
    LossOptions opt;
    opt.with_tok = false;
    opt.with_lat = false;

    double first = 0.0;
    double last = 0.0;
    for (int step = 0; step < 200; ++step) {
        GradTape tape;
        double phy = 0.0;
        for (size_t i = 0; i < states.size(); ++i) {
            phy += compute_losses(model, states[i], padded[i], &train[i].frames, opt, &tape).phy;
        }
        phy /= static_cast<double>(states.size());
        tape.scale(1.0 / static_cast<double>(states.size()));
        if (step == 0) {
            first = phy;
        }
        last = phy;
        for (Tensor* param : model.params()) {
            const auto* grad = tape.find(param->name);
            if (grad == nullptr) {
                continue;
            }
            for (size_t e = 0; e < param->data.size(); ++e) {
                param->data[e] -= 8.0 * (*grad)[e];
            }
        }
    }
    CHECK(first > 0.0);
    CHECK(last <= 0.5 * first);
}

TEST_CASE("eval helpers and option validation") {
    Fixture fx(31, 12);
    const double loss = eval_token_loss(fx.model, fx.dev, Fixture::kBudget, 3);
    CHECK(std::isfinite(loss));
    CHECK(loss > 0.0);
    // paired evaluation: identical models get identical values
    CHECK(eval_token_loss(fx.model, fx.dev, Fixture::kBudget, 3) == loss);

    const UnmaskSchedule sched = build_schedule(Fixture::kBudget, 4, ScheduleVariant::utc);
    const double bleu = eval_sibleu(fx.model, fx.dev, sched, 3);
    CHECK(bleu >= 0.0);
    CHECK(bleu <= 100.0);

    TrainOptions opt = base_options(Phase::pretrain);
    opt.span_budget = 0;
    CHECK_THROWS_AS(train_model(fx.model, fx.train, opt, nullptr), ConfigError);
    CHECK_THROWS_AS(train_model(fx.model, {}, base_options(Phase::pretrain), nullptr), DataError);
}
