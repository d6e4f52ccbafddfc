#include "signdiff/model.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace signdiff {

namespace {

std::vector<double> softmax(const std::vector<double>& logits) {
    double m = logits[0];
    for (double v : logits) {
        m = std::max(m, v);
    }
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out) {
        v /= sum;
    }
    return out;
}

std::vector<double> head_logits(const Tensor& w, const Tensor& b, const double* h) {
    std::vector<double> logits(w.rows());
    const int dim = w.cols();
    for (int r = 0; r < w.rows(); ++r) {
        const double* row = w.row(r);
        double acc = b.data[r];
        for (int c = 0; c < dim; ++c) {
            acc += row[c] * h[c];
        }
        logits[r] = acc;
    }
    return logits;
}

double max_of(const std::vector<double>& v) {
    double m = v[0];
    for (double x : v) {
        m = std::max(m, x);
    }
    return m;
}

}  // namespace

void SeqModel::init(const ModelConfig& config, uint64_t seed) {
    config.vocab.validate();
    cfg = config;
    CounterRng rng = CounterRng(seed).split(404);
    const int d = cfg.model_dim;
    const double emb_scale = 1.0 / std::sqrt(static_cast<double>(d));

    text_table = Tensor("emb.text", {cfg.vocab.text_vocab, d});
    text_table.fill_uniform(rng, emb_scale);
    eos_emb = Tensor("emb.eos", {d});
    eos_emb.fill_uniform(rng, emb_scale);
    mask_emb = Tensor("emb.mask", {d});
    mask_emb.fill_uniform(rng, emb_scale);
    pos_table = Tensor("emb.pos", {cfg.max_len, d});
    pos_table.fill_uniform(rng, emb_scale);

    mix_blocks.clear();
    for (int b = 0; b < cfg.blocks; ++b) {
        MixBlock block;
        const std::string prefix = "block" + std::to_string(b);
        block.w_loc = Tensor(prefix + ".w_loc", {d, d});
        block.w_loc.fill_uniform(rng, emb_scale);
        block.b_loc = Tensor(prefix + ".b_loc", {d});
        block.w_ctx = Tensor(prefix + ".w_ctx", {d, d});
        block.w_ctx.fill_uniform(rng, emb_scale);
        block.b_ctx = Tensor(prefix + ".b_ctx", {d});
        // gate opens at exactly 1 so the block starts purely additive
        block.w_sel = Tensor(prefix + ".w_sel", {d, d});
        block.w_sel.fill_uniform(rng, emb_scale);
        block.b_sel = Tensor(prefix + ".b_sel", {d});
        std::fill(block.b_sel.data.begin(), block.b_sel.data.end(), 1.0);
        mix_blocks.push_back(std::move(block));
    }

    head_text_w = Tensor("head.text_w", {cfg.vocab.text_classes(), d});
    head_text_w.fill_uniform(rng, emb_scale);
    head_text_b = Tensor("head.text_b", {cfg.vocab.text_classes()});
    for (int p = 0; p < kNumParts; ++p) {
        head_part_w[p] =
            Tensor("head.part_w." + std::string(part_name(p)), {cfg.vocab.sign_classes(), d});
        head_part_w[p].fill_uniform(rng, emb_scale);
        head_part_b[p] =
            Tensor("head.part_b." + std::string(part_name(p)), {cfg.vocab.sign_classes()});
    }

    CounterRng mop_rng = rng.split(9);
    mop.init(cfg.code_dim, d, mop_rng);

    for (int p = 0; p < kNumParts; ++p) {
        const std::string prefix = "latent." + std::string(part_name(p));
        latent_heads[p].w1 = Tensor(prefix + ".w1", {d, d});
        latent_heads[p].w1.fill_uniform(rng, emb_scale);
        latent_heads[p].b1 = Tensor(prefix + ".b1", {d});
        latent_heads[p].w2 = Tensor(prefix + ".w2", {cfg.code_dim, d});
        latent_heads[p].w2.fill_uniform(rng, emb_scale);
        latent_heads[p].b2 = Tensor(prefix + ".b2", {cfg.code_dim});
    }
}

void SeqModel::set_codebooks(const std::array<Codebook, kNumParts>& books_in) {
    for (int p = 0; p < kNumParts; ++p) {
        if (books_in[p].code_dim != cfg.code_dim) {
            throw std::invalid_argument("codebook dim does not match the model");
        }
        if (books_in[p].n_codes != cfg.vocab.sign_vocab) {
            throw std::invalid_argument("codebook size does not match the sign vocab");
        }
    }
    books = books_in;
}

std::vector<Tensor*> SeqModel::params() {
    std::vector<Tensor*> out = {&text_table, &eos_emb, &mask_emb, &pos_table};
    for (auto& block : mix_blocks) {
        out.push_back(&block.w_loc);
        out.push_back(&block.b_loc);
        out.push_back(&block.w_ctx);
        out.push_back(&block.b_ctx);
        out.push_back(&block.w_sel);
        out.push_back(&block.b_sel);
    }
    out.push_back(&head_text_w);
    out.push_back(&head_text_b);
    for (int p = 0; p < kNumParts; ++p) {
        out.push_back(&head_part_w[p]);
        out.push_back(&head_part_b[p]);
    }
    for (Tensor* t : mop.params()) {
        out.push_back(t);
    }
    for (auto& head : latent_heads) {
        out.push_back(&head.w1);
        out.push_back(&head.b1);
        out.push_back(&head.w2);
        out.push_back(&head.b2);
    }
    return out;
}

std::vector<const Tensor*> SeqModel::params() const {
    auto mutable_list = const_cast<SeqModel*>(this)->params();
    return {mutable_list.begin(), mutable_list.end()};
}

Tensor* SeqModel::find_param(const std::string& name) {
    for (Tensor* t : params()) {
        if (t->name == name) {
            return t;
        }
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

ForwardCache model_forward(const SeqModel& model, const MaskState& state) {
    const Layout lay = state.layout();
    const int L = lay.total();
    const int d = model.cfg.model_dim;
    if (L > model.cfg.max_len) {
        throw std::invalid_argument("sequence too long for the model");
    }
    const VocabSpec& vocab = model.cfg.vocab;

    ForwardCache cache;
    cache.layout = lay;
    cache.embeds.resize(L);
    cache.h0 = Matrix(L, d);

    for (int pos = 0; pos < L; ++pos) {
        EmbedSource src;
        const double* emb = nullptr;
        if (state.pos_masked(pos)) {
            src.kind = EmbedSource::mask_tok;
            emb = model.mask_emb.data.data();
        } else if (lay.is_text(pos)) {
            src.kind = EmbedSource::text_tok;
            src.token = state.seq.text[pos];
            if (src.token == vocab.eos_id()) {
                src.kind = EmbedSource::eos_tok;
                emb = model.eos_emb.data.data();
            } else {
                emb = model.text_table.row(vocab.text_class_of(src.token));
            }
        } else if (lay.is_sep(pos)) {
            src.kind = EmbedSource::eos_tok;
            emb = model.eos_emb.data.data();
        } else {
            const int slot = lay.slot_of(pos);
            if (state.seq.slot_is_eos(slot, vocab)) {
                src.kind = EmbedSource::eos_tok;
                emb = model.eos_emb.data.data();
            } else {
                src.kind = EmbedSource::sign_mop;
                std::array<int, kNumParts> ids{};
                for (int p = 0; p < kNumParts; ++p) {
                    ids[p] = state.seq.span[p][slot];
                }
                src.mop_index = static_cast<int>(cache.mop_caches.size());
                cache.mop_caches.push_back(
                    mop_embed_variant(ids, model.books, model.mop, model.cfg.embed_variant));
                emb = cache.mop_caches.back().out.data();
            }
        }
        cache.embeds[pos] = src;
        double* row = cache.h0.row(pos);
        const double* pos_emb = model.pos_table.row(pos);
        for (int c = 0; c < d; ++c) {
            row[c] = emb[c] + pos_emb[c];
        }
    }

    const bool causal = model.cfg.direction == Direction::causal;
    const Matrix* h_in = &cache.h0;
    for (const auto& block : model.mix_blocks) {
        BlockCache bc;
        bc.u = Matrix(L, d);
        bc.m = Matrix(L, d);
        bc.ctx = Matrix(L, d);
        bc.gate = Matrix(L, d);
        bc.act = Matrix(L, d);
        bc.h_out = Matrix(L, d);

        for (int pos = 0; pos < L; ++pos) {
            const double* h = h_in->row(pos);
            double* u = bc.u.row(pos);
            double* gate = bc.gate.row(pos);
            for (int r = 0; r < d; ++r) {
                const double* wl = block.w_loc.row(r);
                const double* ws = block.w_sel.row(r);
                double acc_u = block.b_loc.data[r];
                double acc_g = block.b_sel.data[r];
                for (int c = 0; c < d; ++c) {
                    acc_u += wl[c] * h[c];
                    acc_g += ws[c] * h[c];
                }
                u[r] = acc_u;
                gate[r] = acc_g;
            }
        }

        if (causal) {
            std::vector<double> running(d, 0.0);
            for (int pos = 0; pos < L; ++pos) {
                const double* u = bc.u.row(pos);
                double* m = bc.m.row(pos);
                for (int c = 0; c < d; ++c) {
                    running[c] += u[c];
                    m[c] = running[c] / static_cast<double>(pos + 1);
                }
            }
        } else {
            std::vector<double> mean(d, 0.0);
            for (int pos = 0; pos < L; ++pos) {
                const double* u = bc.u.row(pos);
                for (int c = 0; c < d; ++c) {
                    mean[c] += u[c];
                }
            }
            for (double& v : mean) {
                v /= static_cast<double>(L);
            }
            for (int pos = 0; pos < L; ++pos) {
                std::copy(mean.begin(), mean.end(), bc.m.row(pos));
            }
        }

        for (int pos = 0; pos < L; ++pos) {
            const double* u = bc.u.row(pos);
            const double* m = bc.m.row(pos);
            const double* gate = bc.gate.row(pos);
            const double* h = h_in->row(pos);
            double* ctx = bc.ctx.row(pos);
            double* act = bc.act.row(pos);
            double* out = bc.h_out.row(pos);
            for (int r = 0; r < d; ++r) {
                const double* w = block.w_ctx.row(r);
                double acc = block.b_ctx.data[r];
                for (int c = 0; c < d; ++c) {
                    acc += w[c] * m[c];
                }
                ctx[r] = acc;
                act[r] = std::tanh(u[r] + ctx[r] * gate[r]);
                out[r] = h[r] + act[r];
            }
        }

        cache.blocks.push_back(std::move(bc));
        h_in = &cache.blocks.back().h_out;
    }
    return cache;
}

FillDist predict(const SeqModel& model, const MaskState& state) {
    const ForwardCache cache = model_forward(model, state);
    const Matrix& hidden = cache.final_hidden();
    const Layout lay = cache.layout;

    FillDist out;
    for (int pos = 0; pos < lay.total(); ++pos) {
        if (!state.pos_masked(pos)) {
            continue;
        }
        if (lay.is_text(pos) || lay.is_sep(pos)) {
            out.text_rows.emplace(
                pos, softmax(head_logits(model.head_text_w, model.head_text_b, hidden.row(pos))));
        } else {
            const int slot = lay.slot_of(pos);
            std::array<std::vector<double>, kNumParts> rows;
            for (int p = 0; p < kNumParts; ++p) {
                rows[p] = softmax(
                    head_logits(model.head_part_w[p], model.head_part_b[p], hidden.row(pos)));
            }
            out.span_rows.emplace(slot, std::move(rows));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

GradTape predictor_backward(const SeqModel& model, const ForwardCache& cache,
                            const HeadGradients& grads) {
    GradTape tape;
    const Layout lay = cache.layout;
    const int L = lay.total();
    const int d = model.cfg.model_dim;
    const Matrix& hidden = cache.final_hidden();

    Matrix dh(L, d);  // gradient w.r.t. the final hidden states

    for (const auto& [pos, dlogits] : grads.text_dlogits) {
        auto& dw = tape.grad_for(model.head_text_w);
        auto& db = tape.grad_for(model.head_text_b);
        const double* h = hidden.row(pos);
        double* dh_row = dh.row(pos);
        for (int r = 0; r < model.head_text_w.rows(); ++r) {
            const double g = dlogits[r];
            if (g == 0.0) {
                continue;
            }
            db[r] += g;
            double* dwrow = dw.data() + static_cast<size_t>(r) * d;
            const double* wrow = model.head_text_w.row(r);
            for (int c = 0; c < d; ++c) {
                dwrow[c] += g * h[c];
                dh_row[c] += g * wrow[c];
            }
        }
    }
    for (const auto& [slot, part_dlogits] : grads.span_dlogits) {
        const int pos = lay.pos_of_slot(slot);
        const double* h = hidden.row(pos);
        double* dh_row = dh.row(pos);
        for (int p = 0; p < kNumParts; ++p) {
            auto& dw = tape.grad_for(model.head_part_w[p]);
            auto& db = tape.grad_for(model.head_part_b[p]);
            for (int r = 0; r < model.head_part_w[p].rows(); ++r) {
                const double g = part_dlogits[p][r];
                if (g == 0.0) {
                    continue;
                }
                db[r] += g;
                double* dwrow = dw.data() + static_cast<size_t>(r) * d;
                const double* wrow = model.head_part_w[p].row(r);
                for (int c = 0; c < d; ++c) {
                    dwrow[c] += g * h[c];
                    dh_row[c] += g * wrow[c];
                }
            }
        }
    }
    for (const auto& [pos, extra] : grads.hidden_extra) {
        double* dh_row = dh.row(pos);
        for (int c = 0; c < d; ++c) {
            dh_row[c] += extra[c];
        }
    }

    const bool causal = model.cfg.direction == Direction::causal;
    for (int b = static_cast<int>(model.mix_blocks.size()) - 1; b >= 0; --b) {
        const auto& block = model.mix_blocks[b];
        const BlockCache& bc = cache.blocks[b];
        const Matrix& h_in = b == 0 ? cache.h0 : cache.blocks[b - 1].h_out;

        auto& dw_loc = tape.grad_for(block.w_loc);
        auto& db_loc = tape.grad_for(block.b_loc);
        auto& dw_ctx = tape.grad_for(block.w_ctx);
        auto& db_ctx = tape.grad_for(block.b_ctx);
        auto& dw_sel = tape.grad_for(block.w_sel);
        auto& db_sel = tape.grad_for(block.b_sel);

        Matrix du(L, d);
        Matrix dm(L, d);
        Matrix dh_next(L, d);  // gradient into the block input

        for (int pos = 0; pos < L; ++pos) {
            const double* act = bc.act.row(pos);
            const double* m = bc.m.row(pos);
            const double* ctx = bc.ctx.row(pos);
            const double* gate = bc.gate.row(pos);
            const double* h = h_in.row(pos);
            const double* g = dh.row(pos);
            double* du_row = du.row(pos);
            double* dm_row = dm.row(pos);
            double* dh_in = dh_next.row(pos);
            for (int r = 0; r < d; ++r) {
                const double dz = g[r] * (1.0 - act[r] * act[r]);
                dh_in[r] += g[r];  // residual
                du_row[r] += dz;
                const double dctx = dz * gate[r];
                const double dgate = dz * ctx[r];
                db_ctx[r] += dctx;
                db_sel[r] += dgate;
                double* dwc = dw_ctx.data() + static_cast<size_t>(r) * d;
                double* dws = dw_sel.data() + static_cast<size_t>(r) * d;
                const double* wc = block.w_ctx.row(r);
                const double* ws = block.w_sel.row(r);
                for (int c = 0; c < d; ++c) {
                    dwc[c] += dctx * m[c];
                    dm_row[c] += dctx * wc[c];
                    dws[c] += dgate * h[c];
                    dh_in[c] += dgate * ws[c];
                }
            }
        }

        if (causal) {
            // m_i = mean(u_0..u_i): suffix-accumulate dm_i / (i+1)
            std::vector<double> suffix(d, 0.0);
            for (int pos = L - 1; pos >= 0; --pos) {
                const double* dm_row = dm.row(pos);
                double* du_row = du.row(pos);
                const double inv = 1.0 / static_cast<double>(pos + 1);
                for (int c = 0; c < d; ++c) {
                    suffix[c] += dm_row[c] * inv;
                    du_row[c] += suffix[c];
                }
            }
        } else {
            std::vector<double> total(d, 0.0);
            for (int pos = 0; pos < L; ++pos) {
                const double* dm_row = dm.row(pos);
                for (int c = 0; c < d; ++c) {
                    total[c] += dm_row[c];
                }
            }
            const double inv = 1.0 / static_cast<double>(L);
            for (int pos = 0; pos < L; ++pos) {
                double* du_row = du.row(pos);
                for (int c = 0; c < d; ++c) {
                    du_row[c] += total[c] * inv;
                }
            }
        }

        for (int pos = 0; pos < L; ++pos) {
            const double* du_row = du.row(pos);
            const double* h = h_in.row(pos);
            double* dh_in = dh_next.row(pos);
            for (int r = 0; r < d; ++r) {
                const double g = du_row[r];
                if (g == 0.0) {
                    continue;
                }
                db_loc[r] += g;
                double* dwrow = dw_loc.data() + static_cast<size_t>(r) * d;
                const double* wrow = block.w_loc.row(r);
                for (int c = 0; c < d; ++c) {
                    dwrow[c] += g * h[c];
                    dh_in[c] += g * wrow[c];
                }
            }
        }
        dh = std::move(dh_next);
    }

    // embeddings
    auto& dpos = tape.grad_for(model.pos_table);
    const VocabSpec& vocab = model.cfg.vocab;
    for (int pos = 0; pos < L; ++pos) {
        const double* g = dh.row(pos);
        double* dpos_row = dpos.data() + static_cast<size_t>(pos) * d;
        for (int c = 0; c < d; ++c) {
            dpos_row[c] += g[c];
        }
        const EmbedSource& src = cache.embeds[pos];
        switch (src.kind) {
            case EmbedSource::text_tok: {
                auto& dtab = tape.grad_for(model.text_table);
                double* row =
                    dtab.data() + static_cast<size_t>(vocab.text_class_of(src.token)) * d;
                for (int c = 0; c < d; ++c) {
                    row[c] += g[c];
                }
                break;
            }
            case EmbedSource::eos_tok: {
                auto& de = tape.grad_for(model.eos_emb);
                for (int c = 0; c < d; ++c) {
                    de[c] += g[c];
                }
                break;
            }
            case EmbedSource::mask_tok: {
                auto& dm_emb = tape.grad_for(model.mask_emb);
                for (int c = 0; c < d; ++c) {
                    dm_emb[c] += g[c];
                }
                break;
            }
            case EmbedSource::sign_mop: {
                const std::vector<double> upstream(g, g + d);
                mop_backward(upstream, cache.mop_caches[src.mop_index], model.mop, tape);
                break;
            }
        }
    }
    return tape;
}

LatentForward latent_forward(const SeqModel::LatentHead& head, const std::vector<double>& h) {
    LatentForward fwd;
    fwd.input = h;
    const int d = head.w1.cols();
    fwd.hidden.assign(head.w1.rows(), 0.0);
    for (int r = 0; r < head.w1.rows(); ++r) {
        const double* w = head.w1.row(r);
        double acc = head.b1.data[r];
        for (int c = 0; c < d; ++c) {
            acc += w[c] * h[c];
        }
        fwd.hidden[r] = std::tanh(acc);
    }
    fwd.out.assign(head.w2.rows(), 0.0);
    for (int r = 0; r < head.w2.rows(); ++r) {
        const double* w = head.w2.row(r);
        double acc = head.b2.data[r];
        for (int c = 0; c < head.w2.cols(); ++c) {
            acc += w[c] * fwd.hidden[c];
        }
        fwd.out[r] = acc;
    }
    return fwd;
}

void latent_backward(const SeqModel::LatentHead& head, const LatentForward& fwd,
                     const std::vector<double>& dout, GradTape& tape,
                     std::vector<double>* dinput) {
    const int hidden_dim = head.w1.rows();
    const int in_dim = head.w1.cols();
    auto& dw2 = tape.grad_for(head.w2);
    auto& db2 = tape.grad_for(head.b2);
    std::vector<double> dhidden(hidden_dim, 0.0);
    for (int r = 0; r < head.w2.rows(); ++r) {
        const double g = dout[r];
        if (g == 0.0) {
            continue;
        }
        db2[r] += g;
        double* dwrow = dw2.data() + static_cast<size_t>(r) * hidden_dim;
        const double* wrow = head.w2.row(r);
        for (int c = 0; c < hidden_dim; ++c) {
            dwrow[c] += g * fwd.hidden[c];
            dhidden[c] += g * wrow[c];
        }
    }
    auto& dw1 = tape.grad_for(head.w1);
    auto& db1 = tape.grad_for(head.b1);
    for (int r = 0; r < hidden_dim; ++r) {
        const double dz = dhidden[r] * (1.0 - fwd.hidden[r] * fwd.hidden[r]);
        if (dz == 0.0) {
            continue;
        }
        db1[r] += dz;
        double* dwrow = dw1.data() + static_cast<size_t>(r) * in_dim;
        const double* wrow = head.w1.row(r);
        for (int c = 0; c < in_dim; ++c) {
            dwrow[c] += dz * fwd.input[c];
            if (dinput != nullptr) {
                (*dinput)[c] += dz * wrow[c];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// generation
// ---------------------------------------------------------------------------

PredictorFn oracle_predictor(const PaddedSequence& truth, const VocabSpec& vocab) {
    return [truth, vocab](const MaskState& state) { return oracle_fill_dist(state, truth, vocab); };
}

TokenSequence generate_with(const PredictorFn& predictor, const std::vector<int>& text,
                            const UnmaskSchedule& schedule, uint64_t rng_seed,
                            const VocabSpec& vocab, GenStats* stats) {
    TokenSequence prompt;
    prompt.text = text;
    const PaddedSequence start = pad_sequence(prompt, schedule.total, vocab);
    MaskState state = forward_mask(start, 1.0, MaskMode::finetune, rng_seed, vocab);

    GenStats local;
    CounterRng root = CounterRng(rng_seed).split(505);
    const auto t0 = std::chrono::steady_clock::now();

    int unmasked = 0;
    for (const auto& step : schedule.steps) {
        const FillDist fill = predictor(state);
        local.calls += 1;

        std::map<int, double> confidences;
        for (int slot : step.candidate_positions) {
            if (!state.span_mask[slot]) {
                continue;
            }
            const auto& rows = fill.span_rows.at(slot);
            double conf = 1.0;
            for (int p = 0; p < kNumParts; ++p) {
                conf *= max_of(rows[p]);
            }
            confidences[slot] = conf;
        }
        CounterRng step_rng = root.split(static_cast<uint64_t>(step.index));
        const auto picked =
            select_unmask(confidences, step, step_rng.next_u64());
        for (int slot : picked) {
            const auto& rows = fill.span_rows.at(slot);
            for (int p = 0; p < kNumParts; ++p) {
                const int cls = sample_categorical(rows[p], step_rng.next_double());
                state.seq.span[p][slot] = vocab.sign_id_of(cls);
            }
            state.span_mask[slot] = 0;
        }
        unmasked += static_cast<int>(picked.size());
        local.unmasked_after_step.push_back(unmasked);
        state.t = 1.0 - static_cast<double>(unmasked) / schedule.total;
    }

    local.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (stats != nullptr) {
        *stats = std::move(local);
    }
    return truncate_at_eos(state.seq, vocab);
}

TokenSequence generate(const SeqModel& model, const std::vector<int>& text,
                       const UnmaskSchedule& schedule, uint64_t rng_seed, GenStats* stats) {
    return generate_with([&model](const MaskState& s) { return predict(model, s); }, text,
                         schedule, rng_seed, model.cfg.vocab, stats);
}

TokenSequence ar_generate(const SeqModel& model, const std::vector<int>& text, int max_tokens,
                          uint64_t rng_seed, GenStats* stats, bool stop_at_eos) {
    if (model.cfg.direction != Direction::causal) {
        throw std::invalid_argument("ar_generate requires a causal model");
    }
    (void)rng_seed;  // greedy decoding; seed kept for interface symmetry
    const VocabSpec& vocab = model.cfg.vocab;
    GenStats local;
    const auto t0 = std::chrono::steady_clock::now();

    TokenSequence out;
    out.text = text;
    for (int emitted = 0; emitted < max_tokens; ++emitted) {
        // the model sees the prefix [text][eos][emitted slots]
        const PaddedSequence prefix = pad_sequence(out, emitted, vocab);
        MaskState state;
        state.seq = prefix;
        state.text_mask.assign(prefix.text_len(), 0);
        state.span_mask.assign(prefix.span_len(), 0);
        state.mode = MaskMode::finetune;
        const ForwardCache cache = model_forward(model, state);
        local.calls += 1;

        const double* h = cache.final_hidden().row(cache.layout.total() - 1);
        std::array<int, kNumParts> next{};
        bool is_eos = false;
        for (int p = 0; p < kNumParts; ++p) {
            const auto probs =
                softmax(head_logits(model.head_part_w[p], model.head_part_b[p], h));
            // with stop_at_eos off, the eos class is skipped to force full length
            const int limit = stop_at_eos ? static_cast<int>(probs.size())
                                          : static_cast<int>(probs.size()) - 1;
            int arg = 0;
            for (int i = 1; i < limit; ++i) {
                if (probs[i] > probs[arg]) {
                    arg = i;
                }
            }
            const int id = vocab.sign_id_of(arg);
            if (id == vocab.eos_id()) {
                is_eos = true;
            }
            next[p] = id;
        }
        if (is_eos && stop_at_eos) {
            break;
        }
        for (int p = 0; p < kNumParts; ++p) {
            out.sign[p].push_back(next[p]);
        }
    }

    local.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (stats != nullptr) {
        *stats = std::move(local);
    }
    return out;
}

}  // namespace signdiff
