#include "signdiff/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace signdiff {

namespace {

// packs up to 4 token ids into one key; ids stay well below 2^16 here
uint64_t gram_key(const std::vector<int>& toks, int start, int n) {
    uint64_t key = static_cast<uint64_t>(n);
    for (int i = 0; i < n; ++i) {
        key = key * 1000003ULL + static_cast<uint64_t>(toks[start + i]) + 1;
    }
    return key;
}

}  // namespace

double corpus_bleu(const std::vector<std::vector<int>>& hyps,
                   const std::vector<std::vector<int>>& refs, int max_n) {
    if (hyps.size() != refs.size()) {
        throw std::invalid_argument("corpus_bleu: corpus sizes differ");
    }
    double hyp_len = 0.0;
    double ref_len = 0.0;
    std::vector<double> matched(max_n, 0.0);
    std::vector<double> total(max_n, 0.0);

    for (size_t s = 0; s < hyps.size(); ++s) {
        const auto& hyp = hyps[s];
        const auto& ref = refs[s];
        hyp_len += static_cast<double>(hyp.size());
        ref_len += static_cast<double>(ref.size());
        for (int n = 1; n <= max_n; ++n) {
            std::map<uint64_t, int> ref_counts;
            for (int i = 0; i + n <= static_cast<int>(ref.size()); ++i) {
                ref_counts[gram_key(ref, i, n)]++;
            }
            std::map<uint64_t, int> hyp_counts;
            for (int i = 0; i + n <= static_cast<int>(hyp.size()); ++i) {
                hyp_counts[gram_key(hyp, i, n)]++;
            }
            for (const auto& [key, count] : hyp_counts) {
                total[n - 1] += count;
                auto it = ref_counts.find(key);
                if (it != ref_counts.end()) {
                    matched[n - 1] += std::min(count, it->second);
                }
            }
        }
    }

    double log_prec = 0.0;
    for (int n = 0; n < max_n; ++n) {
        if (total[n] == 0.0 || matched[n] == 0.0) {
            return 0.0;
        }
        log_prec += std::log(matched[n] / total[n]);
    }
    log_prec /= max_n;

    double brevity = 1.0;
    if (hyp_len < ref_len) {
        brevity = hyp_len > 0.0 ? std::exp(1.0 - ref_len / hyp_len) : 0.0;
    }
    return 100.0 * brevity * std::exp(log_prec);
}

double sibleu(const std::vector<int>& hyp, const std::vector<int>& ref, int max_n) {
    return corpus_bleu({hyp}, {ref}, max_n);
}

SiBleuReport sibleu_corpus(const std::vector<TokenSequence>& hyps,
                           const std::vector<TokenSequence>& refs) {
    if (hyps.size() != refs.size()) {
        throw std::invalid_argument("sibleu_corpus: corpus sizes differ");
    }
    std::array<std::vector<std::vector<int>>, kNumParts> hyp_streams;
    std::array<std::vector<std::vector<int>>, kNumParts> ref_streams;
    for (size_t i = 0; i < hyps.size(); ++i) {
        for (int p = 0; p < kNumParts; ++p) {
            hyp_streams[p].push_back(hyps[i].sign[p]);
            ref_streams[p].push_back(refs[i].sign[p]);
        }
    }
    SiBleuReport report;
    const int body = static_cast<int>(Part::body);
    const int left = static_cast<int>(Part::left);
    const int right = static_cast<int>(Part::right);
    report.body = corpus_bleu(hyp_streams[body], ref_streams[body]);
    report.hands = 0.5 * (corpus_bleu(hyp_streams[left], ref_streams[left]) +
                          corpus_bleu(hyp_streams[right], ref_streams[right]));
    return report;
}

double dtw_jpe(const MotionSequence& gen, const MotionSequence& ref,
               const std::vector<int>& columns) {
    const int rows = gen.length();
    const int cols = ref.length();
    if (rows == 0 || cols == 0) {
        throw std::invalid_argument("dtw_jpe: empty sequence");
    }
    if (columns.empty()) {
        throw std::invalid_argument("dtw_jpe: no columns selected");
    }

    auto frame_cost = [&](int i, int j) {
        double acc = 0.0;
        for (int c : columns) {
            const double dlt = gen.frames.at(i, c) - ref.frames.at(j, c);
            acc += dlt * dlt;
        }
        return std::sqrt(acc / static_cast<double>(columns.size()));
    };

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(cols, inf);
    std::vector<double> cur(cols, inf);
    for (int i = 0; i < rows; ++i) {
        std::fill(cur.begin(), cur.end(), inf);
        for (int j = 0; j < cols; ++j) {
            const double c = frame_cost(i, j);
            if (i == 0 && j == 0) {
                cur[j] = 2.0 * c;
                continue;
            }
            double best = inf;
            if (j > 0) {
                best = std::min(best, cur[j - 1] + c);  // horizontal, weight 1
            }
            if (i > 0) {
                best = std::min(best, prev[j] + c);  // vertical, weight 1
            }
            if (i > 0 && j > 0) {
                best = std::min(best, prev[j - 1] + 2.0 * c);  // diagonal, weight 2
            }
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    return prev[cols - 1] / static_cast<double>(rows + cols);
}

DtwReport dtw_corpus(const std::vector<MotionSequence>& gen,
                     const std::vector<MotionSequence>& ref) {
    if (gen.size() != ref.size() || gen.empty()) {
        throw std::invalid_argument("dtw_corpus: corpus sizes differ or empty");
    }
    DtwReport report;
    int counted = 0;
    for (size_t i = 0; i < gen.size(); ++i) {
        if (gen[i].length() == 0 || ref[i].length() == 0) {
            continue;  // an empty generation contributes nothing alignable
        }
        const auto body_cols = ref[i].part_columns(static_cast<int>(Part::body));
        std::vector<int> hand_cols = ref[i].part_columns(static_cast<int>(Part::left));
        const auto right_cols = ref[i].part_columns(static_cast<int>(Part::right));
        hand_cols.insert(hand_cols.end(), right_cols.begin(), right_cols.end());
        report.body += dtw_jpe(gen[i], ref[i], body_cols);
        report.hands += dtw_jpe(gen[i], ref[i], hand_cols);
        ++counted;
    }
    if (counted > 0) {
        report.body /= counted;
        report.hands /= counted;
    }
    return report;
}

std::string MetricReport::to_table() const {
    std::ostringstream os;
    os << "metric          value\n";
    os << "--------------  ----------\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "sibleu_body     %10.4f\n", sibleu.body);
    os << buf;
    std::snprintf(buf, sizeof(buf), "sibleu_hands    %10.4f\n", sibleu.hands);
    os << buf;
    std::snprintf(buf, sizeof(buf), "dtw_body        %10.6f\n", dtw.body);
    os << buf;
    std::snprintf(buf, sizeof(buf), "dtw_hands       %10.6f\n", dtw.hands);
    os << buf;
    std::snprintf(buf, sizeof(buf), "samples         %10d\n", samples);
    os << buf;
    return os.str();
}

std::string MetricReport::to_line() const {
    std::ostringstream os;
    os << "sibleu_body=" << sibleu.body << " sibleu_hands=" << sibleu.hands
       << " dtw_body=" << dtw.body << " dtw_hands=" << dtw.hands << " samples=" << samples;
    return os.str();
}

namespace {

struct Timing {
    double mean = 0.0;
    double stddev = 0.0;
};

Timing summarize(const std::vector<double>& xs) {
    Timing t;
    for (double x : xs) {
        t.mean += x;
    }
    t.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) {
        var += (x - t.mean) * (x - t.mean);
    }
    t.stddev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    return t;
}

}  // namespace

LatencyReport bench_latency(const SeqModel& mdlm, const SeqModel& ar,
                            const std::vector<std::vector<int>>& texts, int M, int k, int repeats,
                            int warmup) {
    if (texts.empty() || repeats < 1) {
        throw std::invalid_argument("bench_latency: need texts and repeats >= 1");
    }
    const UnmaskSchedule plain = build_schedule(M, k, ScheduleVariant::plain);
    const UnmaskSchedule utc = build_schedule(M, k, ScheduleVariant::utc);

    LatencyReport report;
    report.repeats = repeats;
    report.generated_tokens = M;

    for (int w = 0; w < warmup; ++w) {
        generate(mdlm, texts[0], plain, 1);
        ar_generate(ar, texts[0], M, 1, nullptr, /*stop_at_eos=*/false);
    }

    std::vector<double> plain_times, utc_times, ar_times;
    for (int r = 0; r < repeats; ++r) {
        const auto& text = texts[r % texts.size()];
        GenStats stats;
        generate(mdlm, text, plain, 1000 + r, &stats);
        plain_times.push_back(stats.wall_seconds);
        report.mdlm_plain_calls = stats.calls;

        generate(mdlm, text, utc, 2000 + r, &stats);
        utc_times.push_back(stats.wall_seconds);
        report.mdlm_utc_calls = stats.calls;

        // fixed-length decoding for a like-for-like latency comparison
        ar_generate(ar, text, M, 3000 + r, &stats, /*stop_at_eos=*/false);
        ar_times.push_back(stats.wall_seconds);
        report.ar_calls = stats.calls;
    }

    const Timing tp = summarize(plain_times);
    report.mdlm_plain_mean = tp.mean;
    report.mdlm_plain_std = tp.stddev;
    const Timing tu = summarize(utc_times);
    report.mdlm_utc_mean = tu.mean;
    report.mdlm_utc_std = tu.stddev;
    const Timing ta = summarize(ar_times);
    report.ar_mean = ta.mean;
    report.ar_std = ta.stddev;
    return report;
}

std::string LatencyReport::to_table() const {
    std::ostringstream os;
    char buf[128];
    os << "decoder        mean_s      std_s       calls\n";
    std::snprintf(buf, sizeof(buf), "mdlm_plain  %9.6f  %9.6f  %9d\n", mdlm_plain_mean,
                  mdlm_plain_std, mdlm_plain_calls);
    os << buf;
    std::snprintf(buf, sizeof(buf), "mdlm_utc    %9.6f  %9.6f  %9d\n", mdlm_utc_mean, mdlm_utc_std,
                  mdlm_utc_calls);
    os << buf;
    std::snprintf(buf, sizeof(buf), "ar          %9.6f  %9.6f  %9d\n", ar_mean, ar_std, ar_calls);
    os << buf;
    std::snprintf(buf, sizeof(buf), "repeats=%d generated_tokens=%d\n", repeats, generated_tokens);
    os << buf;
    return os.str();
}

}  // namespace signdiff
