#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "signdiff/model.hpp"
#include "signdiff/motion.hpp"
#include "signdiff/schedule.hpp"

namespace signdiff {

// Flat key=value experiment configuration. Unknown keys are rejected so a
// typo cannot silently change a run. An `include <path>` line splices
// another file in place (relative to the including file).
struct RunConfig {
    uint64_t seed = 1;
    std::string out_dir = "runs";

    // dataset
    int n = 200;
    int lexicon = 64;
    int dims = 24;
    int min_signs = 2;
    int max_signs = 8;
    int min_sign_frames = 16;
    int max_sign_frames = 40;
    double single_hand_fraction = 0.3;

    // tokenizer
    int n_codes = 64;
    int code_dim = 16;
    int kmeans_iters = 25;

    // model
    int model_dim = 64;
    int blocks = 2;
    int max_len = 128;
    std::string embed = "dense";  // dense | avg | top1 | top2

    // schedule
    int M = 100;
    int k = 4;
    std::string variant = "plain";  // plain | utc

    // training
    int pretrain_epochs = 50;
    int epochs = 50;
    int batch = 16;
    double lr = 0.05;
    double alpha = 0.5;
    double grad_clip = 5.0;
    bool loss_lat = true;
    bool loss_phy = true;

    // bench
    int bench_repeats = 50;

    void set(const std::string& key, const std::string& value);
    void validate() const;  // throws ConfigError

    MotionConfig motion_config() const;
    ModelConfig model_config() const;  // vocab derived from lexicon and n_codes
    ScheduleVariant schedule_variant() const { return parse_variant(variant); }

    // sorted key=value lines; the basis of the run hash
    std::string canonical() const;
    std::string hash16() const;  // FNV-1a 64 over canonical(), hex
    std::string run_dir() const;

    static RunConfig from_file(const std::string& path);
    void apply_file(const std::string& path);
};

uint64_t fnv1a64(const std::string& text);

}  // namespace signdiff
