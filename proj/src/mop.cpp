#include "signdiff/mop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace signdiff {

MoPVariant parse_mop_variant(const std::string& name) {
    if (name == "dense") {
        return MoPVariant::dense;
    }
    if (name == "avg") {
        return MoPVariant::simple_avg;
    }
    if (name == "top1") {
        return MoPVariant::top1;
    }
    if (name == "top2") {
        return MoPVariant::top2;
    }
    throw std::invalid_argument("unknown embedding variant: " + name);
}

const char* mop_variant_name(MoPVariant v) {
    switch (v) {
        case MoPVariant::dense:
            return "dense";
        case MoPVariant::simple_avg:
            return "avg";
        case MoPVariant::top1:
            return "top1";
        default:
            return "top2";
    }
}

void MoPParams::init(int code_dim_in, int model_dim_in, CounterRng& rng) {
    code_dim = code_dim_in;
    model_dim = model_dim_in;
    gate_hidden = 2 * code_dim;
    const double fc_scale = 1.0 / std::sqrt(static_cast<double>(code_dim));
    for (int p = 0; p < kNumParts; ++p) {
        fc_weight[p] = Tensor("mop.fc_w." + std::string(part_name(p)), {model_dim, code_dim});
        fc_weight[p].fill_uniform(rng, fc_scale);
        fc_bias[p] = Tensor("mop.fc_b." + std::string(part_name(p)), {model_dim});
    }
    gate_w1 = Tensor("mop.gate_w1", {gate_hidden, kNumParts * code_dim});
    gate_w1.fill_uniform(rng, 1.0 / std::sqrt(static_cast<double>(kNumParts * code_dim)));
    gate_b1 = Tensor("mop.gate_b1", {gate_hidden});
    // zero output layer: gating starts exactly uniform
    gate_w2 = Tensor("mop.gate_w2", {kNumParts, gate_hidden});
    gate_b2 = Tensor("mop.gate_b2", {kNumParts});
}

std::vector<Tensor*> MoPParams::params() {
    std::vector<Tensor*> out;
    for (int p = 0; p < kNumParts; ++p) {
        out.push_back(&fc_weight[p]);
    }
    for (int p = 0; p < kNumParts; ++p) {
        out.push_back(&fc_bias[p]);
    }
    out.push_back(&gate_w1);
    out.push_back(&gate_b1);
    out.push_back(&gate_w2);
    out.push_back(&gate_b2);
    return out;
}

std::vector<const Tensor*> MoPParams::params() const {
    auto mutable_list = const_cast<MoPParams*>(this)->params();
    return {mutable_list.begin(), mutable_list.end()};
}

namespace {

std::array<double, kNumParts> softmax3(const std::array<double, kNumParts>& logits) {
    const double m = std::max({logits[0], logits[1], logits[2]});
    std::array<double, kNumParts> e{};
    double sum = 0.0;
    for (int p = 0; p < kNumParts; ++p) {
        e[p] = std::exp(logits[p] - m);
        sum += e[p];
    }
    for (int p = 0; p < kNumParts; ++p) {
        e[p] /= sum;
    }
    return e;
}

}  // namespace

MoPForward mop_embed_variant(const std::array<int, kNumParts>& part_ids,
                             const std::array<Codebook, kNumParts>& books, const MoPParams& params,
                             MoPVariant variant) {
    MoPForward fwd;
    fwd.ids = part_ids;
    fwd.variant = variant;
    fwd.gate_input.reserve(kNumParts * params.code_dim);
    for (int p = 0; p < kNumParts; ++p) {
        const double* code = books[p].code_row(part_ids[p]);
        fwd.codes[p].assign(code, code + params.code_dim);
        fwd.gate_input.insert(fwd.gate_input.end(), fwd.codes[p].begin(), fwd.codes[p].end());

        fwd.proj[p].assign(params.model_dim, 0.0);
        for (int r = 0; r < params.model_dim; ++r) {
            const double* w = params.fc_weight[p].row(r);
            double acc = params.fc_bias[p].data[r];
            for (int c = 0; c < params.code_dim; ++c) {
                acc += w[c] * fwd.codes[p][c];
            }
            fwd.proj[p][r] = acc;
        }
    }

    fwd.gate_hidden.assign(params.gate_hidden, 0.0);
    for (int h = 0; h < params.gate_hidden; ++h) {
        const double* w = params.gate_w1.row(h);
        double acc = params.gate_b1.data[h];
        for (size_t i = 0; i < fwd.gate_input.size(); ++i) {
            acc += w[i] * fwd.gate_input[i];
        }
        fwd.gate_hidden[h] = std::tanh(acc);
    }
    for (int p = 0; p < kNumParts; ++p) {
        const double* w = params.gate_w2.row(p);
        double acc = params.gate_b2.data[p];
        for (int h = 0; h < params.gate_hidden; ++h) {
            acc += w[h] * fwd.gate_hidden[h];
        }
        fwd.gate_logits[p] = acc;
    }
    fwd.soft_gates = softmax3(fwd.gate_logits);

    switch (variant) {
        case MoPVariant::dense:
            fwd.gates = fwd.soft_gates;
            break;
        case MoPVariant::simple_avg:
            fwd.gates = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
            break;
        case MoPVariant::top1:
        case MoPVariant::top2: {
            const int keep = variant == MoPVariant::top1 ? 1 : 2;
            std::array<int, kNumParts> order = {0, 1, 2};
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (fwd.soft_gates[a] != fwd.soft_gates[b]) {
                    return fwd.soft_gates[a] > fwd.soft_gates[b];
                }
                return a < b;
            });
            double total = 0.0;
            for (int i = 0; i < keep; ++i) {
                total += fwd.soft_gates[order[i]];
            }
            fwd.gates = {0.0, 0.0, 0.0};
            for (int i = 0; i < keep; ++i) {
                fwd.gates[order[i]] = fwd.soft_gates[order[i]] / total;
            }
            break;
        }
    }

    fwd.out.assign(params.model_dim, 0.0);
    for (int p = 0; p < kNumParts; ++p) {
        const double g = fwd.gates[p];
        for (int r = 0; r < params.model_dim; ++r) {
            fwd.out[r] += g * fwd.proj[p][r];
        }
    }
    return fwd;
}

MoPForward mop_embed(const std::array<int, kNumParts>& part_ids,
                     const std::array<Codebook, kNumParts>& books, const MoPParams& params) {
    return mop_embed_variant(part_ids, books, params, MoPVariant::dense);
}

std::vector<double> avg_embed(const std::array<int, kNumParts>& part_ids,
                              const std::array<Codebook, kNumParts>& books,
                              const MoPParams& params) {
    return mop_embed_variant(part_ids, books, params, MoPVariant::simple_avg).out;
}

MoPForward sparse_embed(const std::array<int, kNumParts>& part_ids,
                        const std::array<Codebook, kNumParts>& books, const MoPParams& params,
                        int top_k) {
    if (top_k >= kNumParts) {
        return mop_embed(part_ids, books, params);
    }
    if (top_k != 1 && top_k != 2) {
        throw std::invalid_argument("top_k must be 1 or 2");
    }
    return mop_embed_variant(part_ids, books, params,
                             top_k == 1 ? MoPVariant::top1 : MoPVariant::top2);
}

void mop_backward(const std::vector<double>& upstream, const MoPForward& fwd,
                  const MoPParams& params, GradTape& tape,
                  std::array<std::vector<double>, kNumParts>* code_grads) {
    std::array<std::vector<double>, kNumParts> dcodes;
    for (int p = 0; p < kNumParts; ++p) {
        dcodes[p].assign(params.code_dim, 0.0);
    }

    // projection path
    std::array<double, kNumParts> dgates{};
    for (int p = 0; p < kNumParts; ++p) {
        const double g = fwd.gates[p];
        auto& dw = tape.grad_for(params.fc_weight[p]);
        auto& db = tape.grad_for(params.fc_bias[p]);
        double dot = 0.0;
        for (int r = 0; r < params.model_dim; ++r) {
            const double de = g * upstream[r];
            db[r] += de;
            double* dwrow = dw.data() + static_cast<size_t>(r) * params.code_dim;
            const double* wrow = params.fc_weight[p].row(r);
            for (int c = 0; c < params.code_dim; ++c) {
                dwrow[c] += de * fwd.codes[p][c];
                dcodes[p][c] += de * wrow[c];
            }
            dot += upstream[r] * fwd.proj[p][r];
        }
        dgates[p] = dot;
    }

    // gate path: d(loss)/d(softmax gates)
    std::array<double, kNumParts> dsoft{};
    bool gate_grad = true;
    switch (fwd.variant) {
        case MoPVariant::dense:
            dsoft = dgates;
            break;
        case MoPVariant::simple_avg:
            gate_grad = false;  // constant gates
            break;
        case MoPVariant::top1:
        case MoPVariant::top2: {
            double total = 0.0;
            for (int p = 0; p < kNumParts; ++p) {
                if (fwd.gates[p] > 0.0) {
                    total += fwd.soft_gates[p];
                }
            }
            for (int m = 0; m < kNumParts; ++m) {
                if (fwd.gates[m] <= 0.0) {
                    continue;  // dropped parts carry no gate gradient
                }
                double acc = 0.0;
                for (int i = 0; i < kNumParts; ++i) {
                    if (fwd.gates[i] <= 0.0) {
                        continue;
                    }
                    const double jac = ((i == m ? 1.0 : 0.0) - fwd.gates[i]) / total;
                    acc += dgates[i] * jac;
                }
                dsoft[m] = acc;
            }
            break;
        }
    }

    if (gate_grad) {
        // softmax jacobian into the logits
        std::array<double, kNumParts> dlogits{};
        double inner = 0.0;
        for (int q = 0; q < kNumParts; ++q) {
            inner += fwd.soft_gates[q] * dsoft[q];
        }
        for (int p = 0; p < kNumParts; ++p) {
            dlogits[p] = fwd.soft_gates[p] * (dsoft[p] - inner);
        }

        auto& dw2 = tape.grad_for(params.gate_w2);
        auto& db2 = tape.grad_for(params.gate_b2);
        std::vector<double> dhidden(params.gate_hidden, 0.0);
        for (int p = 0; p < kNumParts; ++p) {
            db2[p] += dlogits[p];
            double* row = dw2.data() + static_cast<size_t>(p) * params.gate_hidden;
            const double* w = params.gate_w2.row(p);
            for (int h = 0; h < params.gate_hidden; ++h) {
                row[h] += dlogits[p] * fwd.gate_hidden[h];
                dhidden[h] += dlogits[p] * w[h];
            }
        }

        auto& dw1 = tape.grad_for(params.gate_w1);
        auto& db1 = tape.grad_for(params.gate_b1);
        const int gate_in = kNumParts * params.code_dim;
        for (int h = 0; h < params.gate_hidden; ++h) {
            const double dz = dhidden[h] * (1.0 - fwd.gate_hidden[h] * fwd.gate_hidden[h]);
            db1[h] += dz;
            double* row = dw1.data() + static_cast<size_t>(h) * gate_in;
            const double* w = params.gate_w1.row(h);
            for (int i = 0; i < gate_in; ++i) {
                row[i] += dz * fwd.gate_input[i];
                dcodes[i / params.code_dim][i % params.code_dim] += dz * w[i];
            }
        }
    }

    if (code_grads != nullptr) {
        for (int p = 0; p < kNumParts; ++p) {
            if (code_grads->at(p).size() != dcodes[p].size()) {
                code_grads->at(p).assign(dcodes[p].size(), 0.0);
            }
            for (int c = 0; c < params.code_dim; ++c) {
                code_grads->at(p)[c] += dcodes[p][c];
            }
        }
    }
}

}  // namespace signdiff
