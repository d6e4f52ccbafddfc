#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "signdiff/metrics.hpp"
#include "signdiff/motion.hpp"
#include "signdiff/rng.hpp"

using namespace signdiff;

TEST_CASE("bleu boundary cases") {
    const std::vector<int> ref = {1, 2, 3, 4, 5, 6};
    CHECK(sibleu(ref, ref) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(sibleu({7, 8, 9, 10}, {1, 2, 3, 4}) == 0.0);
    CHECK(sibleu({}, ref) == 0.0);
    CHECK(sibleu({1, 2, 3}, ref) == 0.0);  // too short for any 4-gram
}

TEST_CASE("bleu agrees with the reference implementation") {
    CHECK(sibleu({1, 2, 3, 4, 5}, {1, 2, 3, 4, 6}) ==
          doctest::Approx(testoracle::reference_bleu({{1, 2, 3, 4, 5}}, {{1, 2, 3, 4, 6}}))
              .epsilon(1e-9));

    CounterRng rng(31);
    for (int corpus = 0; corpus < 20; ++corpus) {
        std::vector<std::vector<int>> hyps;
        std::vector<std::vector<int>> refs;
        const int n = 1 + static_cast<int>(rng.next_below(6));
        for (int s = 0; s < n; ++s) {
            const int hyp_len = 1 + static_cast<int>(rng.next_below(15));
            const int ref_len = 1 + static_cast<int>(rng.next_below(15));
            std::vector<int> hyp(hyp_len);
            std::vector<int> ref(ref_len);
            for (auto& t : hyp) {
                t = static_cast<int>(rng.next_below(6));
            }
            for (auto& t : ref) {
                t = static_cast<int>(rng.next_below(6));
            }
            hyps.push_back(std::move(hyp));
            refs.push_back(std::move(ref));
        }
        const double ours = corpus_bleu(hyps, refs);
        const double reference = testoracle::reference_bleu(hyps, refs);
        CHECK(std::abs(ours - reference) < 1e-6);
    }
}

TEST_CASE("shuffling a hypothesis never raises the score") {
    const std::vector<int> ref = {1, 2, 3, 4, 5, 6, 7, 8};
    const std::vector<int> hyp = ref;
    const double aligned = sibleu(hyp, ref);
    CounterRng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<int> shuffled = hyp;
        rng.shuffle(shuffled);
        CHECK(sibleu(shuffled, ref) <= aligned + 1e-12);
    }
}

TEST_CASE("sibleu_corpus splits body and hands") {
    TokenSequence a;
    a.sign[0] = {1, 2, 3, 4, 5};
    a.sign[1] = {9, 9, 9, 9, 9};
    a.sign[2] = {1, 2, 3, 4, 5};
    TokenSequence b = a;
    const SiBleuReport same = sibleu_corpus({a}, {b});
    CHECK(same.body == doctest::Approx(100.0));
    CHECK(same.hands == doctest::Approx(100.0));

    // wreck only the left hand: body stays perfect, hands averages 100 and 0
    TokenSequence c = a;
    c.sign[1] = {7, 8, 7, 8, 7};
    const SiBleuReport half = sibleu_corpus({c}, {b});
    CHECK(half.body == doctest::Approx(100.0));
    CHECK(half.hands == doctest::Approx(50.0).epsilon(1e-6));
}

namespace {

MotionSequence motion_from(const std::vector<std::vector<double>>& rows) {
    MotionSequence m;
    m.frames = Matrix(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        for (size_t c = 0; c < rows[r].size(); ++c) {
            m.frames.at(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
        }
    }
    return m;
}

double oracle_dtw(const MotionSequence& a, const MotionSequence& b,
                  const std::vector<int>& cols) {
    std::vector<std::vector<double>> cost(a.length(), std::vector<double>(b.length()));
    for (int i = 0; i < a.length(); ++i) {
        for (int j = 0; j < b.length(); ++j) {
            double acc = 0.0;
            for (int c : cols) {
                const double d = a.frames.at(i, c) - b.frames.at(j, c);
                acc += d * d;
            }
            cost[i][j] = std::sqrt(acc / cols.size());
        }
    }
    return testoracle::dtw_bruteforce(cost);
}

}  // namespace

TEST_CASE("dtw identity and duplication give zero") {
    const MotionSequence a = motion_from({{0.0}, {1.0}, {2.0}});
    CHECK(dtw_jpe(a, a, {0}) == 0.0);

    const MotionSequence doubled =
        motion_from({{0.0}, {0.0}, {1.0}, {1.0}, {2.0}, {2.0}});
    CHECK(dtw_jpe(doubled, a, {0}) == 0.0);
    CHECK(dtw_jpe(a, doubled, {0}) == 0.0);
}

TEST_CASE("dtw toy case matches path enumeration") {
    const MotionSequence a = motion_from({{0.0}, {1.0}, {2.0}});
    const MotionSequence b = motion_from({{0.0}, {2.0}});
    CHECK(dtw_jpe(a, b, {0}) == doctest::Approx(oracle_dtw(a, b, {0})).epsilon(1e-12));
}

TEST_CASE("dtw equals brute force on random tiny pairs") {
    CounterRng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const int ta = 1 + static_cast<int>(rng.next_below(6));
        const int tb = 1 + static_cast<int>(rng.next_below(6));
        const int dims = 2;
        std::vector<std::vector<double>> ra(ta, std::vector<double>(dims));
        std::vector<std::vector<double>> rb(tb, std::vector<double>(dims));
        for (auto& row : ra) {
            for (auto& v : row) {
                v = rng.next_range(-2.0, 2.0);
            }
        }
        for (auto& row : rb) {
            for (auto& v : row) {
                v = rng.next_range(-2.0, 2.0);
            }
        }
        const MotionSequence a = motion_from(ra);
        const MotionSequence b = motion_from(rb);
        const double fast = dtw_jpe(a, b, {0, 1});
        const double slow = oracle_dtw(a, b, {0, 1});
        CHECK(std::abs(fast - slow) < 1e-12);
        // symmetry of the weighted formulation
        CHECK(std::abs(fast - dtw_jpe(b, a, {0, 1})) < 1e-12);
    }
}

TEST_CASE("dtw rejects empty inputs") {
    const MotionSequence a = motion_from({{0.0}});
    MotionSequence empty;
    empty.frames = Matrix(0, 1);
    CHECK_THROWS(dtw_jpe(a, empty, {0}));
    CHECK_THROWS(dtw_jpe(empty, a, {0}));
    CHECK_THROWS(dtw_jpe(a, a, {}));
}

TEST_CASE("latency bench counts calls exactly") {
    MotionConfig mcfg;
    mcfg.min_signs = 2;
    mcfg.max_signs = 3;
    std::vector<MotionSequence> motions;
    for (auto& s : gen_synthetic_pairs(8, 3, mcfg)) {
        motions.push_back(std::move(s.motion));
    }
    const auto books = fit_codebooks(motions, 8, 4, 6, 3);

    ModelConfig cfg;
    cfg.vocab = VocabSpec{10, 8};
    cfg.model_dim = 12;
    cfg.blocks = 2;
    cfg.max_len = 40;
    cfg.code_dim = 4;
    SeqModel mdlm;
    mdlm.init(cfg, 5);
    mdlm.set_codebooks(books);
    cfg.direction = Direction::causal;
    SeqModel ar;
    ar.init(cfg, 5);
    ar.set_codebooks(books);

    const LatencyReport report = bench_latency(mdlm, ar, {{0, 1}, {2, 3}}, 20, 4, 10, 1);
    CHECK(report.mdlm_plain_calls == 5);
    CHECK(report.ar_calls == 20);
    CHECK(report.mdlm_plain_mean > 0.0);
    CHECK(report.ar_mean > 0.0);

    // timing stability smoke: a single repeat lands within a few deviations
    const LatencyReport single = bench_latency(mdlm, ar, {{0, 1}}, 20, 4, 1, 1);
    const double spread = 3.0 * report.ar_std + 0.5 * report.ar_mean + 1e-4;
    CHECK(std::abs(single.ar_mean - report.ar_mean) < spread);
}
