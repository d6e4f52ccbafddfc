#include <cmath>

#include "doctest.h"
#include "signdiff/diffusion.hpp"
#include "signdiff/objectives.hpp"
#include "signdiff/motion.hpp"

using namespace signdiff;

namespace {

struct Fixture {
    std::array<Codebook, kNumParts> books;
    SeqModel model;
    VocabSpec vocab;
    std::vector<Sample> samples;

    explicit Fixture(uint64_t seed, int model_dim = 12, int n_codes = 6, int code_dim = 4) {
        MotionConfig mcfg;
        mcfg.min_signs = 2;
        mcfg.max_signs = 3;
        mcfg.min_sign_frames = 8;
        mcfg.max_sign_frames = 16;
        mcfg.lexicon_size = 50;
        samples = gen_synthetic_pairs(10, seed, mcfg);
        std::vector<MotionSequence> motions;
        for (const auto& s : samples) {
            motions.push_back(s.motion);
        }
        books = fit_codebooks(motions, n_codes, code_dim, 8, seed);
        vocab = VocabSpec{50, n_codes};
        ModelConfig cfg;
        cfg.vocab = vocab;
        cfg.model_dim = model_dim;
        cfg.blocks = 2;
        cfg.max_len = 48;
        cfg.code_dim = code_dim;
        model.init(cfg, seed);
        model.set_codebooks(books);
    }

    // tokenized truth + padded state for one sample
    struct Prepared {
        TokenSequence tokens;
        PaddedSequence padded;
        MaskState state;
    };
    Prepared prepare(int index, double t, MaskMode mode, uint64_t seed, int budget) const {
        Prepared out;
        out.tokens.text = samples[index].text;
        out.tokens.sign = tokenize(samples[index].motion, books);
        out.padded = pad_sequence(out.tokens, budget, vocab);
        out.state = forward_mask(out.padded, t, mode, seed, vocab);
        return out;
    }
};

}  // namespace

TEST_CASE("smooth l1 branch values") {
    CHECK(smooth_l1(0.5) == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(smooth_l1(-0.5) == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(smooth_l1(2.0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(smooth_l1(-2.0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(smooth_l1(0.0) == 0.0);
    CHECK(smooth_l1_grad(0.5) == 0.5);
    CHECK(smooth_l1_grad(2.0) == 1.0);
    CHECK(smooth_l1_grad(-2.0) == -1.0);
}

TEST_CASE("token loss closed forms") {
    // three masked rows, uniform over 8 classes, t = 0.5 -> 6 ln 8
    const std::vector<std::vector<double>> rows(3, std::vector<double>(8, 0.125));
    const std::vector<int> truth = {0, 3, 7};
    CHECK(std::abs(loss_tok(rows, truth, 0.5) - 6.0 * std::log(8.0)) < 1e-9);

    // perfect point masses -> 0
    std::vector<std::vector<double>> point(2, std::vector<double>(4, 0.0));
    point[0][1] = 1.0;
    point[1][2] = 1.0;
    CHECK(loss_tok(point, {1, 2}, 0.7) == 0.0);

    // nothing masked -> 0 even at t=0
    CHECK(loss_tok({}, {}, 0.0) == 0.0);
    CHECK_THROWS(loss_tok(rows, truth, 0.0));
}

TEST_CASE("token loss decreases as mass moves to the truth") {
    double prev = 1e300;
    for (double p = 0.1; p <= 0.9; p += 0.1) {
        std::vector<double> row(5, (1.0 - p) / 4.0);
        row[2] = p;
        const double loss = loss_tok({row}, {2}, 0.5);
        CHECK(loss < prev);
        prev = loss;
    }
}

TEST_CASE("latent loss hand cases") {
    Fixture fx(11);
    // force every code to a single constant so residuals are controlled
    for (int p = 0; p < kNumParts; ++p) {
        for (double& v : fx.books[p].codes.data) {
            v = 1.0;
        }
        fx.model.books[p] = fx.books[p];
        // zero the latent head and pin its output bias
        fx.model.latent_heads[p].w1.zero();
        fx.model.latent_heads[p].b1.zero();
        fx.model.latent_heads[p].w2.zero();
        for (double& v : fx.model.latent_heads[p].b2.data) {
            v = 1.5;  // residual 0.5 against every target
        }
    }
    std::vector<std::vector<double>> hidden(4, std::vector<double>(fx.model.cfg.model_dim, 0.3));
    std::array<std::vector<int>, kNumParts> ids;
    for (int p = 0; p < kNumParts; ++p) {
        ids[p].assign(4, 1);
    }
    const double lat = loss_lat(hidden, fx.model.latent_heads, fx.model.books, ids);
    CHECK(lat == doctest::Approx(3 * 0.125).epsilon(1e-9));

    for (int p = 0; p < kNumParts; ++p) {
        for (double& v : fx.model.latent_heads[p].b2.data) {
            v = 3.0;  // residual 2.0: linear branch, 1.5 per part
        }
    }
    const double lat2 = loss_lat(hidden, fx.model.latent_heads, fx.model.books, ids);
    CHECK(lat2 == doctest::Approx(3 * 1.5).epsilon(1e-9));

    // exact targets -> 0
    for (int p = 0; p < kNumParts; ++p) {
        for (double& v : fx.model.latent_heads[p].b2.data) {
            v = 1.0;
        }
    }
    CHECK(loss_lat(hidden, fx.model.latent_heads, fx.model.books, ids) == 0.0);
}

TEST_CASE("combined loss follows the phase rule") {
    CHECK(loss_combined(1.0, 0.4, 0.6, Phase::pretrain, 0.5) == doctest::Approx(2.0));
    CHECK(loss_combined(1.0, 0.4, 0.6, Phase::finetune, 0.5) == doctest::Approx(1.5));
    CHECK(loss_combined(1.0, 0.4, 0.6, Phase::finetune, 0.0) == doctest::Approx(1.0));
    CHECK_THROWS(loss_combined(1.0, 0.4, 0.6, Phase::finetune, -0.1));
}

TEST_CASE("compute_losses is zero for a perfectly matching setup") {
    Fixture fx(13);
    auto prep = fx.prepare(0, 0.0, MaskMode::pretrain, 1, 14);
    LossOptions opt;
    const LossReport report =
        compute_losses(fx.model, prep.state, prep.padded, &fx.samples[0].motion.frames, opt,
                       nullptr);
    CHECK(report.tok == 0.0);
    CHECK(report.lat == 0.0);
    CHECK(report.phy == 0.0);
    CHECK(report.masked_text == 0);
    CHECK(report.masked_sign == 0);
}

TEST_CASE("full-stack gradients match finite differences") {
    Fixture fx(17);
    auto prep = fx.prepare(1, 0.6, MaskMode::pretrain, 21, 14);

    for (Phase phase : {Phase::pretrain, Phase::finetune}) {
        LossOptions opt;
        opt.phase = phase;
        opt.alpha = 0.5;
        if (phase == Phase::finetune) {
            prep = fx.prepare(1, 0.6, MaskMode::finetune, 33, 14);
        }
        const Matrix* frames = &fx.samples[1].motion.frames;

        GradTape tape;
        compute_losses(fx.model, prep.state, prep.padded, frames, opt, &tape);

        const auto loss_value = [&]() {
            return compute_losses(fx.model, prep.state, prep.padded, frames, opt, nullptr).total;
        };

        const double eps = 1e-4;
        CounterRng pick(99);
        int checked = 0;
        for (Tensor* tensor : fx.model.params()) {
            const auto* grad = tape.find(tensor->name);
            for (int s = 0; s < 5; ++s) {
                const size_t i = static_cast<size_t>(pick.next_below(tensor->data.size()));
                const double keep = tensor->data[i];
                tensor->data[i] = keep + eps;
                const double up = loss_value();
                tensor->data[i] = keep - eps;
                const double down = loss_value();
                tensor->data[i] = keep;
                const double fd = (up - down) / (2.0 * eps);
                const double an = grad == nullptr ? 0.0 : (*grad)[i];
                const double denom = std::max(std::abs(fd), std::abs(an));
                if (denom < 1e-9) {
                    continue;  // jointly dead parameter
                }
                CHECK(std::abs(fd - an) / denom < 1e-4);
                ++checked;
            }
        }
        CHECK(checked > 50);
    }
}

TEST_CASE("context embeddings of unmasked positions receive gradient") {
    Fixture fx(19);
    // four text tokens, one masked sign slot: the unmasked text embedding
    // must influence the masked slot's loss through the pooled context
    TokenSequence seq;
    seq.text = {4, 7};
    for (int p = 0; p < kNumParts; ++p) {
        seq.sign[p] = {1, 2};
    }
    const PaddedSequence padded = pad_sequence(seq, 3, fx.vocab);
    MaskState state = forward_mask(padded, 0.0, MaskMode::finetune, 1, fx.vocab);
    state.t = 0.5;
    state.span_mask[1] = 1;
    for (int p = 0; p < kNumParts; ++p) {
        state.seq.span[p][1] = fx.vocab.mask_id();
    }

    LossOptions opt;
    GradTape tape;
    compute_losses(fx.model, state, padded, &fx.samples[0].motion.frames, opt, &tape);
    const auto* dtext = tape.find("emb.text");
    REQUIRE(dtext != nullptr);
    const int d = fx.model.cfg.model_dim;
    double norm4 = 0.0;
    double norm_unused = 0.0;
    for (int c = 0; c < d; ++c) {
        norm4 += std::abs((*dtext)[4 * d + c]);
        norm_unused += std::abs((*dtext)[9 * d + c]);
    }
    CHECK(norm4 > 1e-12);
    CHECK(norm_unused == 0.0);
}

TEST_CASE("frozen decoder stays out of the tape") {
    Fixture fx(23);
    auto prep = fx.prepare(2, 0.7, MaskMode::pretrain, 5, 14);
    LossOptions opt;
    GradTape tape;
    compute_losses(fx.model, prep.state, prep.padded, &fx.samples[2].motion.frames, opt, &tape);
    CHECK(!tape.grads.empty());
    for (const auto& [name, buf] : tape.grads) {
        CHECK(name.find("dec") == std::string::npos);
        CHECK(name.find("codes") == std::string::npos);
    }
}

TEST_CASE("expected token loss is stable across seeds") {
    // Monte Carlo over t ~ U(0,1) with a fixed imperfect predictor: the 1/t
    // weight is balanced by the masked count growing with t
    const VocabSpec vocab{16, 8};
    TokenSequence seq;
    for (int p = 0; p < kNumParts; ++p) {
        seq.sign[p].assign(40, 1 + (p % vocab.sign_vocab));
    }
    const PaddedSequence padded = pad_sequence(seq, 41, vocab);
    const double truth_prob = 0.3;  // fixed imperfect predictor

    std::vector<double> means;
    for (uint64_t master = 0; master < 6; ++master) {
        CounterRng rng(1000 + master);
        double acc = 0.0;
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) {
            const double t = rng.next_double();
            const MaskState st =
                forward_mask(padded, t, MaskMode::finetune, rng.next_u64(), vocab);
            const int masked = st.masked_count();
            if (masked == 0) {
                continue;
            }
            acc += (1.0 / t) * masked * -std::log(truth_prob);
        }
        means.push_back(acc / draws);
    }
    double mean = 0.0;
    for (double m : means) {
        mean += m;
    }
    mean /= means.size();
    double var = 0.0;
    for (double m : means) {
        var += (m - mean) * (m - mean);
    }
    const double cv = std::sqrt(var / (means.size() - 1)) / mean;
    CHECK(std::isfinite(mean));
    CHECK(cv < 0.05);
}

TEST_CASE("physical loss requires motion frames") {
    Fixture fx(29);
    auto prep = fx.prepare(0, 0.9, MaskMode::pretrain, 2, 14);
    LossOptions opt;
    CHECK_THROWS(compute_losses(fx.model, prep.state, prep.padded, nullptr, opt, nullptr));
    opt.with_phy = false;
    const LossReport report =
        compute_losses(fx.model, prep.state, prep.padded, nullptr, opt, nullptr);
    CHECK(report.phy == 0.0);
    CHECK(report.lat > 0.0);
}
