#include "signdiff/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace signdiff {

double smooth_l1(double residual) {
    const double a = std::abs(residual);
    return a <= 1.0 ? 0.5 * residual * residual : a - 0.5;
}

double smooth_l1_grad(double residual) {
    if (residual > 1.0) {
        return 1.0;
    }
    if (residual < -1.0) {
        return -1.0;
    }
    return residual;
}

double loss_tok(const std::vector<std::vector<double>>& rows,
                const std::vector<int>& truth_classes, double t) {
    if (rows.size() != truth_classes.size()) {
        throw std::invalid_argument("loss_tok: rows and targets differ in count");
    }
    if (rows.empty()) {
        return 0.0;
    }
    if (t <= 0.0) {
        throw std::invalid_argument("loss_tok: t must be positive when indices are masked");
    }
    double acc = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
        const int cls = truth_classes[i];
        if (cls < 0 || cls >= static_cast<int>(rows[i].size())) {
            throw std::invalid_argument("loss_tok: target class out of range");
        }
        acc -= std::log(std::max(rows[i][cls], 1e-300));
    }
    return acc / t;
}

double loss_lat(const std::vector<std::vector<double>>& hidden,
                const std::array<SeqModel::LatentHead, kNumParts>& heads,
                const std::array<Codebook, kNumParts>& books,
                const std::array<std::vector<int>, kNumParts>& truth_ids) {
    if (hidden.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (int p = 0; p < kNumParts; ++p) {
        if (truth_ids[p].size() != hidden.size()) {
            throw std::invalid_argument("loss_lat: id count does not match hidden states");
        }
        const int dim = books[p].code_dim;
        double part = 0.0;
        for (size_t i = 0; i < hidden.size(); ++i) {
            const LatentForward fwd = latent_forward(heads[p], hidden[i]);
            const double* target = books[p].code_row(truth_ids[p][i]);
            for (int c = 0; c < dim; ++c) {
                part += smooth_l1(fwd.out[c] - target[c]);
            }
        }
        total += part / (static_cast<double>(hidden.size()) * dim);
    }
    return total;
}

double loss_phy(const std::vector<std::vector<double>>& hidden,
                const std::array<SeqModel::LatentHead, kNumParts>& heads,
                const std::array<Codebook, kNumParts>& books,
                const std::array<std::vector<std::vector<double>>, kNumParts>& truth_windows) {
    if (hidden.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (int p = 0; p < kNumParts; ++p) {
        if (truth_windows[p].size() != hidden.size()) {
            throw std::invalid_argument("loss_phy: window count does not match hidden states");
        }
        const int dim = books[p].window_dim;
        double part = 0.0;
        for (size_t i = 0; i < hidden.size(); ++i) {
            const LatentForward fwd = latent_forward(heads[p], hidden[i]);
            const auto window = books[p].decode_code(fwd.out);
            for (int c = 0; c < dim; ++c) {
                part += smooth_l1(window[c] - truth_windows[p][i][c]);
            }
        }
        total += part / (static_cast<double>(hidden.size()) * dim);
    }
    return total;
}

double loss_combined(double tok, double lat, double phy, Phase phase, double alpha) {
    if (alpha < 0.0) {
        throw std::invalid_argument("alpha must be nonnegative");
    }
    return phase == Phase::pretrain ? tok + lat + phy : tok + alpha * (lat + phy);
}

namespace {

// slot window of the source motion, flattened like the codebook windows
std::vector<double> truth_window(const Matrix& frames, int part_dim, int part, int slot) {
    std::vector<double> window(4 * part_dim);
    for (int f = 0; f < 4; ++f) {
        const double* row = frames.row(slot * 4 + f);
        for (int c = 0; c < part_dim; ++c) {
            window[f * part_dim + c] = row[part * part_dim + c];
        }
    }
    return window;
}

}  // namespace

LossReport compute_losses(const SeqModel& model, const MaskState& state,
                          const PaddedSequence& truth, const Matrix* truth_frames,
                          const LossOptions& options, GradTape* tape) {
    const Layout lay = state.layout();
    const VocabSpec& vocab = model.cfg.vocab;
    const ForwardCache cache = model_forward(model, state);
    const Matrix& hidden = cache.final_hidden();
    const int d = model.cfg.model_dim;

    LossReport report;
    report.t = state.t;

    HeadGradients head_grads;
    const double latphy_coeff = options.phase == Phase::pretrain ? 1.0 : options.alpha;

    // ---- token space -------------------------------------------------------
    std::vector<int> masked_text_pos;
    for (int i = 0; i < lay.text_len; ++i) {
        if (state.text_mask[i]) {
            masked_text_pos.push_back(i);
        }
    }
    if (state.sep_mask) {
        masked_text_pos.push_back(lay.sep_pos());
    }
    std::vector<int> masked_slots;
    for (int slot = 0; slot < lay.span_len; ++slot) {
        if (state.span_mask[slot]) {
            masked_slots.push_back(slot);
        }
    }
    report.masked_text = static_cast<int>(masked_text_pos.size());
    report.masked_sign = static_cast<int>(masked_slots.size());

    const int n_masked = report.masked_text + report.masked_sign;
    if (n_masked > 0 && state.t <= 0.0) {
        throw std::invalid_argument("token loss undefined at t = 0 with masked indices");
    }
    const double weight = n_masked > 0 ? 1.0 / state.t : 0.0;

    auto softmax_row = [](std::vector<double> logits) {
        double m = logits[0];
        for (double v : logits) {
            m = std::max(m, v);
        }
        double sum = 0.0;
        for (double& v : logits) {
            v = std::exp(v - m);
            sum += v;
        }
        for (double& v : logits) {
            v /= sum;
        }
        return logits;
    };
    auto logits_of = [&](const Tensor& w, const Tensor& b, const double* h) {
        std::vector<double> logits(w.rows());
        for (int r = 0; r < w.rows(); ++r) {
            const double* row = w.row(r);
            double acc = b.data[r];
            for (int c = 0; c < d; ++c) {
                acc += row[c] * h[c];
            }
            logits[r] = acc;
        }
        return logits;
    };

    for (int pos : options.with_tok ? masked_text_pos : std::vector<int>{}) {
        const int target = lay.is_sep(pos) ? vocab.text_class_of(vocab.eos_id())
                                           : vocab.text_class_of(truth.text[pos]);
        auto probs = softmax_row(logits_of(model.head_text_w, model.head_text_b, hidden.row(pos)));
        report.tok += -std::log(std::max(probs[target], 1e-300)) * weight;
        if (tape != nullptr) {
            auto& dl = head_grads.text_dlogits[pos];
            dl.assign(probs.size(), 0.0);
            for (size_t r = 0; r < probs.size(); ++r) {
                dl[r] = weight * probs[r];
            }
            dl[target] -= weight;
        }
    }
    for (int slot : options.with_tok ? masked_slots : std::vector<int>{}) {
        const int pos = lay.pos_of_slot(slot);
        std::array<std::vector<double>, kNumParts>* dl = nullptr;
        if (tape != nullptr) {
            dl = &head_grads.span_dlogits[slot];
        }
        for (int p = 0; p < kNumParts; ++p) {
            const int target = vocab.sign_class_of(truth.span[p][slot]);
            auto probs = softmax_row(
                logits_of(model.head_part_w[p], model.head_part_b[p], hidden.row(pos)));
            report.tok += -std::log(std::max(probs[target], 1e-300)) * weight;
            if (dl != nullptr) {
                (*dl)[p].assign(probs.size(), 0.0);
                for (size_t r = 0; r < probs.size(); ++r) {
                    (*dl)[p][r] = weight * probs[r];
                }
                (*dl)[p][target] -= weight;
            }
        }
    }

    // ---- latent and physical spaces ----------------------------------------
    std::vector<int> real_masked;  // masked slots holding actual sign triples
    for (int slot : masked_slots) {
        if (slot < truth.real_len) {
            real_masked.push_back(slot);
        }
    }
    const bool want_lat = options.with_lat && !real_masked.empty();
    const bool want_phy = options.with_phy && !real_masked.empty();
    if (want_phy && truth_frames == nullptr) {
        throw std::invalid_argument("physical loss requires the source motion frames");
    }

    if (want_lat || want_phy) {
        const double n_slots = static_cast<double>(real_masked.size());
        for (int p = 0; p < kNumParts; ++p) {
            const Codebook& book = model.books[p];
            const double lat_norm = 1.0 / (n_slots * book.code_dim);
            const double phy_norm = 1.0 / (n_slots * book.window_dim);
            const int part_dim = book.window_dim / 4;
            for (int slot : real_masked) {
                const int pos = lay.pos_of_slot(slot);
                const double* h = hidden.row(pos);
                const LatentForward fwd =
                    latent_forward(model.latent_heads[p], std::vector<double>(h, h + d));
                std::vector<double> dout(book.code_dim, 0.0);

                if (want_lat) {
                    const double* target = book.code_row(truth.span[p][slot]);
                    for (int c = 0; c < book.code_dim; ++c) {
                        const double r = fwd.out[c] - target[c];
                        report.lat += smooth_l1(r) * lat_norm;
                        dout[c] += smooth_l1_grad(r) * lat_norm * latphy_coeff;
                    }
                }
                if (want_phy) {
                    const auto window = book.decode_code(fwd.out);
                    const auto target = truth_window(*truth_frames, part_dim, p, slot);
                    std::vector<double> dwin(book.window_dim, 0.0);
                    for (int c = 0; c < book.window_dim; ++c) {
                        const double r = window[c] - target[c];
                        report.phy += smooth_l1(r) * phy_norm;
                        dwin[c] = smooth_l1_grad(r) * phy_norm * latphy_coeff;
                    }
                    // through the frozen decoder: d(out) += W_dec^T d(window)
                    for (int c = 0; c < book.window_dim; ++c) {
                        if (dwin[c] == 0.0) {
                            continue;
                        }
                        const double* row = book.dec_weight.row(c);
                        for (int a = 0; a < book.code_dim; ++a) {
                            dout[a] += dwin[c] * row[a];
                        }
                    }
                }

                if (tape != nullptr) {
                    auto [it, inserted] = head_grads.hidden_extra.try_emplace(pos);
                    if (inserted) {
                        it->second.assign(d, 0.0);
                    }
                    latent_backward(model.latent_heads[p], fwd, dout, *tape, &it->second);
                }
            }
        }
    }

    report.total = loss_combined(report.tok, report.lat, report.phy, options.phase, options.alpha);
    if (tape != nullptr) {
        tape->accumulate(predictor_backward(model, cache, head_grads));
    }
    return report;
}

}  // namespace signdiff
