#pragma once

#include <cstddef>
#include <vector>

namespace proseforge {

// Dense row-major matrix of doubles. Column vectors are (n x 1) matrices.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> d;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), d(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return d[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return d[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return d.size(); }
    bool empty() const { return d.empty(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix column(const std::vector<double>& v);

    bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && d == o.d; }
};

Matrix matmul(const Matrix& a, const Matrix& b);

// a^T * b without materializing the transpose.
Matrix matmul_ta(const Matrix& a, const Matrix& b);

// a * b^T without materializing the transpose.
Matrix matmul_tb(const Matrix& a, const Matrix& b);

} // namespace proseforge
