#include "signdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "signdiff/rng.hpp"

namespace signdiff {

ScheduleVariant parse_variant(const std::string& name) {
    if (name == "plain") {
        return ScheduleVariant::plain;
    }
    if (name == "utc") {
        return ScheduleVariant::utc;
    }
    throw std::invalid_argument("unknown schedule variant: " + name);
}

const char* variant_name(ScheduleVariant v) {
    return v == ScheduleVariant::plain ? "plain" : "utc";
}

std::vector<int> UnmaskSchedule::cumulative_counts() const {
    std::vector<int> out;
    int acc = 0;
    for (const auto& step : steps) {
        acc += step.unmask_count;
        out.push_back(acc);
    }
    return out;
}

std::string UnmaskSchedule::to_table() const {
    std::ostringstream os;
    os << "# schedule M=" << total << " k=" << k << " variant=" << variant_name(variant) << "\n";
    os << "# step  size  stage  candidates\n";
    for (const auto& step : steps) {
        os << step.index << "\t" << step.unmask_count << "\t" << step.stage << "\t";
        for (size_t i = 0; i < step.candidate_positions.size(); ++i) {
            if (i > 0) {
                os << ",";
            }
            os << step.candidate_positions[i];
        }
        os << "\n";
    }
    return os.str();
}

std::vector<int> utc_stage_grid(int M, int stage) {
    std::vector<int> out;
    switch (stage) {
        case 0:
            for (int p = 0; p < M; p += 4) {
                out.push_back(p);
            }
            break;
        case 1:
            for (int p = 2; p < M; p += 4) {
                out.push_back(p);
            }
            break;
        case 2:
            for (int p = 1; p < M; p += 2) {
                out.push_back(p);
            }
            break;
        default:
            throw std::invalid_argument("stage must be 0, 1 or 2");
    }
    return out;
}

std::vector<int> utc_stage_sizes(int M) {
    const int quarter = (M + 3) / 4;
    const int half = (M + 1) / 2;
    return {quarter, half - quarter, M - half};
}

namespace {

std::vector<int> step_sizes(int count, int k) {
    std::vector<int> sizes;
    int remaining = count;
    while (remaining > 0) {
        const int s = std::min(k, remaining);
        sizes.push_back(s);
        remaining -= s;
    }
    return sizes;
}

}  // namespace

UnmaskSchedule build_schedule(int M, int k, ScheduleVariant variant) {
    if (M < 1) {
        throw std::invalid_argument("M must be at least 1");
    }
    if (k < 1 || k > M) {
        throw std::invalid_argument("k must satisfy 1 <= k <= M");
    }
    UnmaskSchedule sched;
    sched.total = M;
    sched.k = k;
    sched.variant = variant;

    if (variant == ScheduleVariant::plain) {
        ScheduleStage stage;
        stage.start_t = 1.0;
        stage.end_t = 0.0;
        stage.allowed_positions.resize(M);
        for (int i = 0; i < M; ++i) {
            stage.allowed_positions[i] = i;
        }
        sched.stages.push_back(stage);
    } else {
        const double bounds[4] = {1.0, 0.75, 0.5, 0.0};
        for (int s = 0; s < 3; ++s) {
            ScheduleStage stage;
            stage.start_t = bounds[s];
            stage.end_t = bounds[s + 1];
            stage.allowed_positions = utc_stage_grid(M, s);
            sched.stages.push_back(stage);
        }
    }

    int index = 0;
    for (size_t s = 0; s < sched.stages.size(); ++s) {
        const auto& stage = sched.stages[s];
        for (int size : step_sizes(static_cast<int>(stage.allowed_positions.size()), k)) {
            ScheduleStep step;
            step.index = index++;
            step.stage = static_cast<int>(s);
            step.unmask_count = size;
            step.candidate_positions = stage.allowed_positions;
            sched.steps.push_back(std::move(step));
        }
    }
    return sched;
}

std::vector<int> select_unmask(const std::map<int, double>& confidences, const ScheduleStep& step,
                               uint64_t tie_seed) {
    const std::set<int> allowed(step.candidate_positions.begin(), step.candidate_positions.end());
    for (const auto& [pos, conf] : confidences) {
        if (!allowed.count(pos)) {
            throw std::invalid_argument("confidence given for a non-candidate position");
        }
        if (!std::isfinite(conf)) {
            throw std::invalid_argument("confidence must be finite");
        }
    }
    if (static_cast<int>(confidences.size()) < step.unmask_count) {
        throw std::invalid_argument("fewer candidates than the step's unmask count");
    }

    struct Entry {
        int pos;
        double conf;
        uint64_t tie;
    };
    std::vector<Entry> entries;
    entries.reserve(confidences.size());
    for (const auto& [pos, conf] : confidences) {
        entries.push_back({pos, conf, CounterRng::hash(tie_seed, static_cast<uint64_t>(pos))});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.conf != b.conf) {
            return a.conf > b.conf;
        }
        if (a.tie != b.tie) {
            return a.tie < b.tie;
        }
        return a.pos < b.pos;
    });

    std::vector<int> out;
    out.reserve(step.unmask_count);
    for (int i = 0; i < step.unmask_count; ++i) {
        out.push_back(entries[i].pos);
    }
    std::sort(out.begin(), out.end());
    return out;
}

BigUint count_orders_plain(int M, int k) {
    if (M < 1 || k < 1 || k > M) {
        throw std::invalid_argument("count_orders_plain requires 1 <= k <= M");
    }
    return ordered_partition_count(M, step_sizes(M, k));
}

BigUint count_orders_utc(int M, int k) {
    if (M < 1 || k < 1 || k > M) {
        throw std::invalid_argument("count_orders_utc requires 1 <= k <= M");
    }
    BigUint total(1);
    for (int size : utc_stage_sizes(M)) {
        if (size == 0) {
            continue;
        }
        total = total * ordered_partition_count(size, step_sizes(size, k));
    }
    return total;
}

namespace {

// ceil((1-t)*M) with a guard against the binary representation of t
// nudging an exactly-integral product upward.
int cumulative_target(int M, double t) {
    const double raw = (1.0 - t) * static_cast<double>(M);
    int n = static_cast<int>(std::ceil(raw - 1e-9));
    return std::clamp(n, 0, M);
}

}  // namespace

std::vector<int> training_index_filter(int M, double t, uint64_t rng_seed) {
    if (M < 1) {
        throw std::invalid_argument("M must be at least 1");
    }
    if (t < 0.0 || t > 1.0 || !std::isfinite(t)) {
        throw std::invalid_argument("noise level t must lie in [0,1]");
    }
    int need = cumulative_target(M, t);
    std::vector<int> unmasked;
    CounterRng rng = CounterRng(rng_seed).split(7);
    for (int stage = 0; stage < 3 && need > 0; ++stage) {
        std::vector<int> grid = utc_stage_grid(M, stage);
        if (need >= static_cast<int>(grid.size())) {
            unmasked.insert(unmasked.end(), grid.begin(), grid.end());
            need -= static_cast<int>(grid.size());
        } else {
            rng.shuffle(grid);
            unmasked.insert(unmasked.end(), grid.begin(), grid.begin() + need);
            need = 0;
        }
    }
    std::sort(unmasked.begin(), unmasked.end());
    return unmasked;
}

bool utc_state_reachable(int M, const std::vector<int>& unmasked) {
    const std::set<int> seen(unmasked.begin(), unmasked.end());
    for (int pos : seen) {
        if (pos < 0 || pos >= M) {
            return false;
        }
    }
    size_t counts[3] = {0, 0, 0};
    size_t sizes[3] = {0, 0, 0};
    for (int stage = 0; stage < 3; ++stage) {
        const auto grid = utc_stage_grid(M, stage);
        sizes[stage] = grid.size();
        for (int pos : grid) {
            counts[stage] += seen.count(pos);
        }
    }
    if (counts[0] + counts[1] + counts[2] != seen.size()) {
        return false;
    }
    // a later stage may only start once every earlier grid is complete
    if (counts[1] > 0 && counts[0] != sizes[0]) {
        return false;
    }
    if (counts[2] > 0 && counts[1] != sizes[1]) {
        return false;
    }
    return true;
}

}  // namespace signdiff
