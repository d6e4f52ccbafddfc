#include "signdiff/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "signdiff/rng.hpp"

namespace signdiff {

namespace {

constexpr char kMagic[4] = {'M', 'D', 'S', 'C'};
constexpr uint32_t kVersion = 1;

double sq_dist(const double* a, const double* b, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void round_to_f32(std::vector<double>& v) {
    for (double& x : v) {
        x = static_cast<double>(static_cast<float>(x));
    }
}

struct KMeansResult {
    Matrix centroids;
    std::vector<int> assignment;
    std::vector<double> errors;  // mean squared error per iteration
};

KMeansResult kmeans(const Matrix& points, int k, int iters, CounterRng rng) {
    const int n = points.rows;
    const int dim = points.cols;
    KMeansResult result;
    result.centroids = Matrix(k, dim);

    // k-means++ seeding
    std::vector<double> min_dist(n, std::numeric_limits<double>::max());
    int first = static_cast<int>(rng.next_below(n));
    std::copy_n(points.row(first), dim, result.centroids.row(0));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = sq_dist(points.row(i), result.centroids.row(c - 1), dim);
            min_dist[i] = std::min(min_dist[i], d);
            total += min_dist[i];
        }
        int chosen = 0;
        if (total > 0.0) {
            double target = rng.next_double() * total;
            for (int i = 0; i < n; ++i) {
                target -= min_dist[i];
                if (target <= 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<int>(rng.next_below(n));
        }
        std::copy_n(points.row(chosen), dim, result.centroids.row(c));
    }

    result.assignment.assign(n, 0);
    for (int iter = 0; iter < iters; ++iter) {
        double sse = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int arg = 0;
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(points.row(i), result.centroids.row(c), dim);
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            result.assignment[i] = arg;
            sse += best;
        }
        result.errors.push_back(sse / n);

        Matrix sums(k, dim);
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            const int c = result.assignment[i];
            counts[c]++;
            const double* src = points.row(i);
            double* dst = sums.row(c);
            for (int d = 0; d < dim; ++d) {
                dst[d] += src[d];
            }
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // move an empty centroid onto the point farthest from its own centroid
                double worst = -1.0;
                int arg = 0;
                for (int i = 0; i < n; ++i) {
                    const double d =
                        sq_dist(points.row(i), result.centroids.row(result.assignment[i]), dim);
                    if (d > worst) {
                        worst = d;
                        arg = i;
                    }
                }
                std::copy_n(points.row(arg), dim, result.centroids.row(c));
                result.assignment[arg] = c;
                continue;
            }
            for (int d = 0; d < dim; ++d) {
                result.centroids.at(c, d) = sums.at(c, d) / counts[c];
            }
        }
    }

    // final assignment after the last centroid update
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::max();
        int arg = 0;
        for (int c = 0; c < k; ++c) {
            const double d = sq_dist(points.row(i), result.centroids.row(c), dim);
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        result.assignment[i] = arg;
        sse += best;
    }
    result.errors.push_back(sse / n);
    return result;
}

Codebook fit_one_part(const std::vector<std::vector<double>>& windows, int part, int n_codes,
                      int code_dim, int iters, CounterRng rng, std::vector<double>* errors) {
    const int n = static_cast<int>(windows.size());
    const int window_dim = static_cast<int>(windows[0].size());
    if (code_dim > window_dim) {
        throw std::invalid_argument("code dim exceeds window dim");
    }

    Codebook book;
    book.part = part;
    book.n_codes = n_codes;
    book.code_dim = code_dim;
    book.window_dim = window_dim;

    // PCA encoder: center then project onto the top code_dim components
    book.enc_center.assign(window_dim, 0.0);
    for (const auto& w : windows) {
        for (int d = 0; d < window_dim; ++d) {
            book.enc_center[d] += w[d];
        }
    }
    for (double& v : book.enc_center) {
        v /= n;
    }
    Matrix cov(window_dim, window_dim);
    for (const auto& w : windows) {
        for (int a = 0; a < window_dim; ++a) {
            const double da = w[a] - book.enc_center[a];
            for (int b = a; b < window_dim; ++b) {
                cov.at(a, b) += da * (w[b] - book.enc_center[b]);
            }
        }
    }
    for (int a = 0; a < window_dim; ++a) {
        for (int b = a; b < window_dim; ++b) {
            cov.at(a, b) /= n;
            cov.at(b, a) = cov.at(a, b);
        }
    }
    const EigenResult eig = symmetric_eigen(cov);
    book.enc_proj = Matrix(code_dim, window_dim);
    for (int r = 0; r < code_dim; ++r) {
        std::copy_n(eig.vectors.row(r), window_dim, book.enc_proj.row(r));
    }

    Matrix latents(n, code_dim);
    for (int i = 0; i < n; ++i) {
        const auto z = book.encode_window(windows[i]);
        std::copy(z.begin(), z.end(), latents.row(i));
    }

    KMeansResult km = kmeans(latents, n_codes, iters, rng);
    book.codes = km.centroids;
    book.quant_error = km.errors.back();
    if (errors != nullptr) {
        *errors = km.errors;
    }

    // decoder: least squares from [code, 1] to the cluster-mean window
    Matrix mean_window(n_codes, window_dim);
    std::vector<int> counts(n_codes, 0);
    for (int i = 0; i < n; ++i) {
        const int c = km.assignment[i];
        counts[c]++;
        for (int d = 0; d < window_dim; ++d) {
            mean_window.at(c, d) += windows[i][d];
        }
    }
    for (int c = 0; c < n_codes; ++c) {
        if (counts[c] == 0) {
            // unmatched code decodes to its own back-projection
            const std::vector<double> code(book.codes.row(c), book.codes.row(c) + code_dim);
            const auto back = matvec_t(book.enc_proj, code);
            for (int d = 0; d < window_dim; ++d) {
                mean_window.at(c, d) = back[d] + book.enc_center[d];
            }
        } else {
            for (int d = 0; d < window_dim; ++d) {
                mean_window.at(c, d) /= counts[c];
            }
        }
    }
    const int unknowns = code_dim + 1;
    Matrix gram(unknowns, unknowns);
    for (int c = 0; c < n_codes; ++c) {
        std::vector<double> row(unknowns, 1.0);
        std::copy_n(book.codes.row(c), code_dim, row.begin());
        for (int a = 0; a < unknowns; ++a) {
            for (int b = 0; b < unknowns; ++b) {
                gram.at(a, b) += row[a] * row[b];
            }
        }
    }
    // ridge for safety when codes are collinear
    for (int a = 0; a < unknowns; ++a) {
        gram.at(a, a) += 1e-9;
    }
    book.dec_weight = Matrix(window_dim, code_dim);
    book.dec_bias.assign(window_dim, 0.0);
    for (int d = 0; d < window_dim; ++d) {
        std::vector<double> rhs(unknowns, 0.0);
        for (int c = 0; c < n_codes; ++c) {
            std::vector<double> row(unknowns, 1.0);
            std::copy_n(book.codes.row(c), code_dim, row.begin());
            for (int a = 0; a < unknowns; ++a) {
                rhs[a] += row[a] * mean_window.at(c, d);
            }
        }
        const auto sol = solve_linear(gram, rhs);
        for (int a = 0; a < code_dim; ++a) {
            book.dec_weight.at(d, a) = sol[a];
        }
        book.dec_bias[d] = sol[code_dim];
    }

    round_to_f32(book.codes.data);
    round_to_f32(book.enc_center);
    round_to_f32(book.enc_proj.data);
    round_to_f32(book.dec_weight.data);
    round_to_f32(book.dec_bias);
    return book;
}

void write_f32(std::ofstream& os, const std::vector<double>& v) {
    for (double d : v) {
        const float f = static_cast<float>(d);
        os.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
}

void read_f32(std::ifstream& is, std::vector<double>& v) {
    for (double& d : v) {
        float f = 0.0f;
        is.read(reinterpret_cast<char*>(&f), sizeof(f));
        d = static_cast<double>(f);
    }
}

void write_u32(std::ofstream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

std::vector<double> Codebook::encode_window(const std::vector<double>& window) const {
    std::vector<double> centered(window_dim);
    for (int d = 0; d < window_dim; ++d) {
        centered[d] = window[d] - enc_center[d];
    }
    return matvec(enc_proj, centered);
}

std::vector<double> Codebook::decode_code(const std::vector<double>& latent) const {
    auto window = matvec(dec_weight, latent);
    for (int d = 0; d < window_dim; ++d) {
        window[d] += dec_bias[d];
    }
    return window;
}

const double* Codebook::code_row(int id) const {
    if (id < 1 || id > n_codes) {
        throw std::invalid_argument("code id out of range");
    }
    return codes.row(id - 1);
}

int Codebook::nearest_code(const std::vector<double>& latent) const {
    double best = std::numeric_limits<double>::max();
    int arg = 0;
    for (int c = 0; c < n_codes; ++c) {
        const double d = sq_dist(latent.data(), codes.row(c), code_dim);
        if (d < best) {
            best = d;
            arg = c;
        }
    }
    return arg + 1;
}

std::vector<std::vector<double>> part_windows(const MotionSequence& motion, int part) {
    if (motion.length() % 4 != 0) {
        throw std::invalid_argument("motion length must be divisible by 4");
    }
    const int part_dim = motion.part_dim();
    const int offset = motion.part_offset(part);
    std::vector<std::vector<double>> out;
    out.reserve(motion.length() / 4);
    for (int w = 0; w + 4 <= motion.length(); w += 4) {
        std::vector<double> window(4 * part_dim);
        for (int f = 0; f < 4; ++f) {
            const double* row = motion.frames.row(w + f);
            for (int c = 0; c < part_dim; ++c) {
                window[f * part_dim + c] = row[offset + c];
            }
        }
        out.push_back(std::move(window));
    }
    return out;
}

std::array<Codebook, kNumParts> fit_codebooks(const std::vector<MotionSequence>& dataset,
                                              int n_codes, int code_dim, int iters, uint64_t seed,
                                              CodebookFitReport* report) {
    if (dataset.empty()) {
        throw std::invalid_argument("empty dataset");
    }
    std::array<std::vector<std::vector<double>>, kNumParts> windows;
    for (const auto& motion : dataset) {
        for (int p = 0; p < kNumParts; ++p) {
            auto w = part_windows(motion, p);
            windows[p].insert(windows[p].end(), w.begin(), w.end());
        }
    }
    for (int p = 0; p < kNumParts; ++p) {
        if (static_cast<int>(windows[p].size()) < n_codes) {
            throw std::invalid_argument("fewer windows than requested codes");
        }
    }

    std::array<Codebook, kNumParts> books;
    CounterRng root = CounterRng(seed).split(303);
    // the three parts fit independently
    std::vector<std::thread> workers;
    std::array<std::exception_ptr, kNumParts> errors{};
    for (int p = 0; p < kNumParts; ++p) {
        workers.emplace_back([&, p]() {
            try {
                std::vector<double> iter_errors;
                books[p] = fit_one_part(windows[p], p, n_codes, code_dim, iters,
                                        root.split(static_cast<uint64_t>(p)), &iter_errors);
                if (report != nullptr) {
                    report->iteration_errors[p] = std::move(iter_errors);
                }
            } catch (...) {
                errors[p] = std::current_exception();
            }
        });
    }
    for (auto& worker : workers) {
        worker.join();
    }
    for (const auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }
    return books;
}

std::array<std::vector<int>, kNumParts> tokenize(const MotionSequence& motion,
                                                 const std::array<Codebook, kNumParts>& books) {
    std::array<std::vector<int>, kNumParts> tokens;
    for (int p = 0; p < kNumParts; ++p) {
        for (const auto& window : part_windows(motion, p)) {
            tokens[p].push_back(books[p].nearest_code(books[p].encode_window(window)));
        }
    }
    return tokens;
}

MotionSequence detokenize(const std::array<std::vector<int>, kNumParts>& tokens,
                          const std::array<Codebook, kNumParts>& books) {
    const size_t len = tokens[0].size();
    for (int p = 1; p < kNumParts; ++p) {
        if (tokens[p].size() != len) {
            throw std::invalid_argument("part token streams differ in length");
        }
    }
    const int part_dim = books[0].window_dim / 4;
    MotionSequence motion;
    motion.frames = Matrix(static_cast<int>(len) * 4, part_dim * kNumParts);
    for (int p = 0; p < kNumParts; ++p) {
        const Codebook& book = books[p];
        for (size_t i = 0; i < len; ++i) {
            const int id = tokens[p][i];
            const double* code = book.code_row(id);
            const auto window = book.decode_code(std::vector<double>(code, code + book.code_dim));
            for (int f = 0; f < 4; ++f) {
                double* row = motion.frames.row(static_cast<int>(i) * 4 + f);
                for (int c = 0; c < part_dim; ++c) {
                    row[p * part_dim + c] = window[f * part_dim + c];
                }
            }
        }
    }
    return motion;
}

void save_codebooks(const std::string& path, const std::array<Codebook, kNumParts>& books) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot open codebook file for writing: " + path);
    }
    for (const Codebook& book : books) {
        os.write(kMagic, 4);
        write_u32(os, kVersion);
        const char tag = "blr"[book.part];
        os.write(&tag, 1);
        write_u32(os, static_cast<uint32_t>(book.n_codes));
        write_u32(os, static_cast<uint32_t>(book.code_dim));
        write_u32(os, static_cast<uint32_t>(book.window_dim));
        write_f32(os, book.codes.data);
        write_f32(os, book.enc_center);
        write_f32(os, book.enc_proj.data);
        write_f32(os, book.dec_weight.data);
        write_f32(os, book.dec_bias);
    }
    if (!os.good()) {
        throw std::runtime_error("failed writing codebooks: " + path);
    }
}

std::array<Codebook, kNumParts> load_codebooks(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open codebook file: " + path);
    }
    std::array<Codebook, kNumParts> books;
    for (int p = 0; p < kNumParts; ++p) {
        char magic[4];
        is.read(magic, 4);
        if (!is.good() || std::memcmp(magic, kMagic, 4) != 0) {
            throw std::runtime_error("bad codebook magic in " + path);
        }
        const uint32_t version = read_u32(is);
        if (version != kVersion) {
            throw std::runtime_error("unsupported codebook version");
        }
        char tag = 0;
        is.read(&tag, 1);
        Codebook book;
        book.part = tag == 'b' ? 0 : (tag == 'l' ? 1 : 2);
        book.n_codes = static_cast<int>(read_u32(is));
        book.code_dim = static_cast<int>(read_u32(is));
        book.window_dim = static_cast<int>(read_u32(is));
        book.codes = Matrix(book.n_codes, book.code_dim);
        read_f32(is, book.codes.data);
        book.enc_center.assign(book.window_dim, 0.0);
        read_f32(is, book.enc_center);
        book.enc_proj = Matrix(book.code_dim, book.window_dim);
        read_f32(is, book.enc_proj.data);
        book.dec_weight = Matrix(book.window_dim, book.code_dim);
        read_f32(is, book.dec_weight.data);
        book.dec_bias.assign(book.window_dim, 0.0);
        read_f32(is, book.dec_bias);
        if (!is.good()) {
            throw std::runtime_error("truncated codebook file: " + path);
        }
        books[p] = std::move(book);
    }
    return books;
}

}  // namespace signdiff
