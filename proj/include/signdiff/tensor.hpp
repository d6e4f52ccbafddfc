#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "signdiff/rng.hpp"

namespace signdiff {

// Named parameter buffer. Everything trainable in this project is one of
// these; shapes are row-major.
struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::string n, std::vector<int> s);

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols(); }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols(); }

    void fill_uniform(CounterRng& rng, double scale);
    void zero();
};

// Gradient buffers keyed by parameter name.
struct GradTape {
    std::map<std::string, std::vector<double>> grads;

    std::vector<double>& grad_for(const Tensor& param);
    const std::vector<double>* find(const std::string& name) const;
    void accumulate(const GradTape& other);
    void scale(double factor);
    double squared_norm() const;
    bool all_zero(double tol = 0.0) const;
};

}  // namespace signdiff
