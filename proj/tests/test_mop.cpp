#include <cmath>

#include "doctest.h"
#include "signdiff/mop.hpp"
#include "signdiff/motion.hpp"
#include "signdiff/rng.hpp"

using namespace signdiff;

namespace {

struct Fixture {
    std::array<Codebook, kNumParts> books;
    MoPParams params;

    explicit Fixture(uint64_t seed, bool random_gate = false, int n_codes = 12, int code_dim = 6,
                     int model_dim = 10) {
        MotionConfig cfg;
        cfg.min_signs = 2;
        cfg.max_signs = 3;
        std::vector<MotionSequence> motions;
        for (auto& s : gen_synthetic_pairs(12, seed, cfg)) {
            motions.push_back(std::move(s.motion));
        }
        books = fit_codebooks(motions, n_codes, code_dim, 10, seed);
        CounterRng rng(seed ^ 0xabcdef);
        params.init(code_dim, model_dim, rng);
        if (random_gate) {
            params.gate_w2.fill_uniform(rng, 0.8);
            params.gate_b2.fill_uniform(rng, 0.2);
        }
    }

    std::array<int, kNumParts> random_ids(CounterRng& rng) const {
        std::array<int, kNumParts> ids{};
        for (int p = 0; p < kNumParts; ++p) {
            ids[p] = 1 + static_cast<int>(rng.next_below(books[p].n_codes));
        }
        return ids;
    }
};

}  // namespace

TEST_CASE("zeroed gate output layer gives exactly uniform gates") {
    Fixture fx(3);
    const MoPForward fwd = mop_embed({1, 2, 3}, fx.books, fx.params);
    for (int p = 0; p < kNumParts; ++p) {
        CHECK(fwd.gates[p] == 1.0 / 3.0);
    }
    // identical to the simple-average baseline, bit for bit
    const auto avg = avg_embed({1, 2, 3}, fx.books, fx.params);
    CHECK(fwd.out == avg);
}

TEST_CASE("gates always sum to one") {
    Fixture fx(5, /*random_gate=*/true);
    CounterRng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto ids = fx.random_ids(rng);
        const MoPForward fwd = mop_embed(ids, fx.books, fx.params);
        double sum = 0.0;
        for (int p = 0; p < kNumParts; ++p) {
            CHECK(fwd.gates[p] > 0.0);
            CHECK(fwd.gates[p] < 1.0);
            sum += fwd.gates[p];
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("uniform-gate dense output matches avg_embed on random ids") {
    Fixture fx(7);  // gate layer still zeroed -> uniform
    CounterRng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ids = fx.random_ids(rng);
        const MoPForward fwd = mop_embed(ids, fx.books, fx.params);
        const auto avg = avg_embed(ids, fx.books, fx.params);
        for (int r = 0; r < fx.params.model_dim; ++r) {
            CHECK(fwd.out[r] == doctest::Approx(avg[r]).epsilon(1e-12));
        }
    }
}

TEST_CASE("avg_embed with identical projections returns that projection") {
    Fixture fx(9);
    // force all three parts to the same projection
    for (int p = 1; p < kNumParts; ++p) {
        fx.params.fc_weight[p].data = fx.params.fc_weight[0].data;
        fx.params.fc_bias[p].data = fx.params.fc_bias[0].data;
        fx.books[p].codes = fx.books[0].codes;
    }
    const auto avg = avg_embed({4, 4, 4}, fx.books, fx.params);
    const MoPForward fwd = mop_embed({4, 4, 4}, fx.books, fx.params);
    for (int r = 0; r < fx.params.model_dim; ++r) {
        CHECK(avg[r] == doctest::Approx(fwd.proj[0][r]).epsilon(1e-12));
    }
}

TEST_CASE("sparse top-1 returns the argmax projection") {
    Fixture fx(11, /*random_gate=*/true);
    CounterRng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto ids = fx.random_ids(rng);
        const MoPForward dense = mop_embed(ids, fx.books, fx.params);
        const MoPForward sparse = sparse_embed(ids, fx.books, fx.params, 1);
        int arg = 0;
        for (int p = 1; p < kNumParts; ++p) {
            if (dense.gates[p] > dense.gates[arg]) {
                arg = p;
            }
        }
        for (int r = 0; r < fx.params.model_dim; ++r) {
            CHECK(sparse.out[r] == doctest::Approx(dense.proj[arg][r]).epsilon(1e-9));
        }
    }
}

TEST_CASE("sparse top-2 renormalizes the surviving gates") {
    Fixture fx(13, /*random_gate=*/true);
    const MoPForward sparse = sparse_embed({1, 2, 3}, fx.books, fx.params, 2);
    int dropped = 0;
    double sum = 0.0;
    for (int p = 0; p < kNumParts; ++p) {
        dropped += sparse.gates[p] == 0.0;
        sum += sparse.gates[p];
    }
    CHECK(dropped == 1);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    // hand-checked renormalization: gates (0.5, 0.3, 0.2) -> (0.625, 0.375, 0)
    const double renorm0 = 0.5 / (0.5 + 0.3);
    const double renorm1 = 0.3 / (0.5 + 0.3);
    CHECK(renorm0 == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(renorm1 == doctest::Approx(0.375).epsilon(1e-12));

    // top-3 degenerates to the dense layer
    const MoPForward full = sparse_embed({1, 2, 3}, fx.books, fx.params, 3);
    const MoPForward dense = mop_embed({1, 2, 3}, fx.books, fx.params);
    CHECK(full.out == dense.out);
}

TEST_CASE("scaling one part's code moves gates but keeps them normalized") {
    Fixture fx(15, /*random_gate=*/true);
    const MoPForward before = mop_embed({2, 2, 2}, fx.books, fx.params);
    for (int c = 0; c < fx.books[1].code_dim; ++c) {
        fx.books[1].codes.at(1, c) *= 10.0;
    }
    const MoPForward after = mop_embed({2, 2, 2}, fx.books, fx.params);
    CHECK(std::abs(after.gates[0] + after.gates[1] + after.gates[2] - 1.0) < 1e-9);
    CHECK(before.gates != after.gates);
}

TEST_CASE("out-of-range ids are rejected") {
    Fixture fx(17);
    CHECK_THROWS(mop_embed({0, 1, 1}, fx.books, fx.params));
    CHECK_THROWS(mop_embed({1, 1, 99}, fx.books, fx.params));
    CHECK_THROWS(sparse_embed({1, 1, 1}, fx.books, fx.params, 0));
}

TEST_CASE("zero upstream gradient leaves the tape empty") {
    Fixture fx(19, /*random_gate=*/true);
    const MoPForward fwd = mop_embed({1, 2, 3}, fx.books, fx.params);
    GradTape tape;
    mop_backward(std::vector<double>(fx.params.model_dim, 0.0), fwd, fx.params, tape);
    CHECK(tape.all_zero());
}

TEST_CASE("backward matches central finite differences") {
    CounterRng trial_rng(777);
    int configs = 0;
    for (uint64_t seed = 40; configs < 50; ++seed) {
        Fixture fx(seed, /*random_gate=*/true);
        const auto ids = fx.random_ids(trial_rng);
        std::vector<double> upstream(fx.params.model_dim);
        for (auto& u : upstream) {
            u = trial_rng.next_range(-1.0, 1.0);
        }

        const auto loss = [&](const MoPParams& p) {
            const MoPForward f = mop_embed(ids, fx.books, p);
            double acc = 0.0;
            for (int r = 0; r < p.model_dim; ++r) {
                acc += upstream[r] * f.out[r];
            }
            return acc;
        };

        const MoPForward fwd = mop_embed(ids, fx.books, fx.params);
        GradTape tape;
        std::array<std::vector<double>, kNumParts> code_grads;
        mop_backward(upstream, fwd, fx.params, tape, &code_grads);

        const double eps = 1e-4;
        for (Tensor* tensor : fx.params.params()) {
            const auto* grad = tape.find(tensor->name);
            for (size_t i = 0; i < tensor->data.size(); i += 1 + tensor->data.size() / 7) {
                const double keep = tensor->data[i];
                tensor->data[i] = keep + eps;
                const double up = loss(fx.params);
                tensor->data[i] = keep - eps;
                const double down = loss(fx.params);
                tensor->data[i] = keep;
                const double fd = (up - down) / (2.0 * eps);
                const double an = grad == nullptr ? 0.0 : (*grad)[i];
                const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
                CHECK(std::abs(fd - an) / denom < 1e-4);
            }
        }

        // code embeddings are inputs; check their gradient too
        for (int p = 0; p < kNumParts; ++p) {
            for (int c = 0; c < fx.params.code_dim; ++c) {
                const double keep = fx.books[p].codes.at(ids[p] - 1, c);
                fx.books[p].codes.at(ids[p] - 1, c) = keep + 1e-4;
                const double up = loss(fx.params);
                fx.books[p].codes.at(ids[p] - 1, c) = keep - 1e-4;
                const double down = loss(fx.params);
                fx.books[p].codes.at(ids[p] - 1, c) = keep;
                const double fd = (up - down) / 2e-4;
                const double denom = std::max({std::abs(fd), std::abs(code_grads[p][c]), 1e-8});
                CHECK(std::abs(fd - code_grads[p][c]) / denom < 1e-4);
            }
        }
        ++configs;
    }
}

TEST_CASE("pre-softmax logit gradients sum to zero") {
    Fixture fx(61, /*random_gate=*/true);
    CounterRng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ids = fx.random_ids(rng);
        std::vector<double> upstream(fx.params.model_dim);
        for (auto& u : upstream) {
            u = rng.next_range(-1.0, 1.0);
        }
        const MoPForward fwd = mop_embed(ids, fx.books, fx.params);
        GradTape tape;
        mop_backward(upstream, fwd, fx.params, tape);
        // gate_b2's gradient equals the logit gradient for a single sample
        const auto* db2 = tape.find(fx.params.gate_b2.name);
        REQUIRE(db2 != nullptr);
        CHECK(std::abs((*db2)[0] + (*db2)[1] + (*db2)[2]) < 1e-12);
    }
}

TEST_CASE("dense output is continuous in the codes") {
    Fixture fx(67, /*random_gate=*/true);
    const MoPForward base = mop_embed({3, 3, 3}, fx.books, fx.params);
    const double delta = 1e-5;
    fx.books[0].codes.at(2, 0) += delta;
    const MoPForward moved = mop_embed({3, 3, 3}, fx.books, fx.params);
    double diff = 0.0;
    for (int r = 0; r < fx.params.model_dim; ++r) {
        diff = std::max(diff, std::abs(moved.out[r] - base.out[r]));
    }
    CHECK(diff < 100.0 * delta);
}
