#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "signdiff/linalg.hpp"
#include "signdiff/motion.hpp"

namespace signdiff {

// Per-part code table with linear encode/decode maps over 4-frame windows.
// Window vectors are the part's columns of 4 consecutive frames, flattened
// frame-major. Public token ids are 1-based.
struct Codebook {
    int part = 0;
    int n_codes = 0;
    int code_dim = 0;
    int window_dim = 0;  // 4 * part_dim

    Matrix codes;                    // n_codes x code_dim
    std::vector<double> enc_center;  // window_dim
    Matrix enc_proj;                 // code_dim x window_dim
    Matrix dec_weight;               // window_dim x code_dim
    std::vector<double> dec_bias;    // window_dim

    double quant_error = 0.0;  // mean squared latent quantization error

    std::vector<double> encode_window(const std::vector<double>& window) const;
    std::vector<double> decode_code(const std::vector<double>& latent) const;
    const double* code_row(int id) const;  // 1-based id
    int nearest_code(const std::vector<double>& latent) const;  // 1-based id
};

struct CodebookFitReport {
    std::array<std::vector<double>, kNumParts> iteration_errors;
};

// Extracts the flattened 4-frame window vectors of one part.
std::vector<std::vector<double>> part_windows(const MotionSequence& motion, int part);

// PCA projection to code_dim, k-means++ & Lloyd to n_codes centroids,
// least-squares linear decoder from codes to cluster-mean windows.
// All stored arrays are rounded to float32 so files and memory agree.
std::array<Codebook, kNumParts> fit_codebooks(const std::vector<MotionSequence>& dataset,
                                              int n_codes, int code_dim, int iters, uint64_t seed,
                                              CodebookFitReport* report = nullptr);

// Nearest-code ids per part; motion length must be divisible by 4.
std::array<std::vector<int>, kNumParts> tokenize(const MotionSequence& motion,
                                                 const std::array<Codebook, kNumParts>& books);

// Decoded windows reassembled into a motion of length 4 * token count.
MotionSequence detokenize(const std::array<std::vector<int>, kNumParts>& tokens,
                          const std::array<Codebook, kNumParts>& books);

// Binary format per part record: magic "MDSC", version, part tag, counts,
// then codes / encoder / decoder as row-major 32-bit floats.
void save_codebooks(const std::string& path, const std::array<Codebook, kNumParts>& books);
std::array<Codebook, kNumParts> load_codebooks(const std::string& path);

}  // namespace signdiff
