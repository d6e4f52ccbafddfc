#include "signdiff/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace signdiff {

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != a.cols) {
        throw std::invalid_argument("matvec: dimension mismatch");
    }
    std::vector<double> y(a.rows, 0.0);
    for (int r = 0; r < a.rows; ++r) {
        const double* row = a.row(r);
        double acc = 0.0;
        for (int c = 0; c < a.cols; ++c) {
            acc += row[c] * x[c];
        }
        y[r] = acc;
    }
    return y;
}

std::vector<double> matvec_t(const Matrix& a, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != a.rows) {
        throw std::invalid_argument("matvec_t: dimension mismatch");
    }
    std::vector<double> y(a.cols, 0.0);
    for (int r = 0; r < a.rows; ++r) {
        const double* row = a.row(r);
        const double xr = x[r];
        for (int c = 0; c < a.cols; ++c) {
            y[c] += row[c] * xr;
        }
    }
    return y;
}

EigenResult symmetric_eigen(const Matrix& input, int max_sweeps) {
    const int n = input.rows;
    if (n != input.cols) {
        throw std::invalid_argument("symmetric_eigen: matrix not square");
    }
    Matrix a = input;
    Matrix v(n, n);
    for (int i = 0; i < n; ++i) {
        v.at(i, i) = 1.0;
    }

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                off += a.at(p, q) * a.at(p, q);
            }
        }
        if (off < 1e-24) {
            break;
        }
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) {
                    continue;
                }
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = a.at(i, p);
                    const double aiq = a.at(i, q);
                    a.at(i, p) = c * aip - s * aiq;
                    a.at(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = a.at(p, i);
                    const double aqi = a.at(q, i);
                    a.at(p, i) = c * api - s * aqi;
                    a.at(q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = v.at(i, p);
                    const double viq = v.at(i, q);
                    v.at(i, p) = c * vip - s * viq;
                    v.at(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (int i = 0; i < n; ++i) {
        diag[i] = a.at(i, i);
    }
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        if (diag[x] != diag[y]) {
            return diag[x] > diag[y];
        }
        return x < y;
    });

    EigenResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (int r = 0; r < n; ++r) {
        const int src = order[r];
        out.values[r] = diag[src];
        int arg = 0;
        double best = 0.0;
        for (int i = 0; i < n; ++i) {
            const double val = v.at(i, src);
            out.vectors.at(r, i) = val;
            if (std::abs(val) > best) {
                best = std::abs(val);
                arg = i;
            }
        }
        if (out.vectors.at(r, arg) < 0.0) {
            for (int i = 0; i < n; ++i) {
                out.vectors.at(r, i) = -out.vectors.at(r, i);
            }
        }
    }
    return out;
}

std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const int n = a.rows;
    if (n != a.cols || static_cast<int>(b.size()) != n) {
        throw std::invalid_argument("solve_linear: dimension mismatch");
    }
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) {
                pivot = r;
            }
        }
        if (std::abs(a.at(pivot, col)) < 1e-14) {
            throw std::runtime_error("solve_linear: singular system");
        }
        if (pivot != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(a.at(pivot, c), a.at(col, c));
            }
            std::swap(b[pivot], b[col]);
        }
        const double inv = 1.0 / a.at(col, col);
        for (int r = col + 1; r < n; ++r) {
            const double f = a.at(r, col) * inv;
            if (f == 0.0) {
                continue;
            }
            for (int c = col; c < n; ++c) {
                a.at(r, c) -= f * a.at(col, c);
            }
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) {
            acc -= a.at(r, c) * x[c];
        }
        x[r] = acc / a.at(r, r);
    }
    return x;
}

}  // namespace signdiff
