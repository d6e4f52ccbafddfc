#pragma once

#include <cstddef>
#include <vector>

namespace signdiff {

// Dense row-major matrix of doubles; small sizes only.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
};

// y = A x  (A: m x n, x: n)
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

// y = A^T x  (A: m x n, x: m)
std::vector<double> matvec_t(const Matrix& a, const std::vector<double>& x);

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Returns eigenvalues (descending) and matching eigenvectors as rows.
// Eigenvector signs are fixed so the largest-magnitude entry is positive.
struct EigenResult {
    std::vector<double> values;
    Matrix vectors;  // one eigenvector per row
};
EigenResult symmetric_eigen(const Matrix& a, int max_sweeps = 64);

// Solves A x = b by Gaussian elimination with partial pivoting. A is consumed.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

}  // namespace signdiff
