#include "proseforge/matrix.hpp"

#include <cmath>

#include "proseforge/errors.hpp"

namespace proseforge {

bool Matrix::all_finite() const {
    for (double x : d) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Matrix Matrix::column(const std::vector<double>& v) {
    Matrix m(static_cast<int>(v.size()), 1);
    m.d = v;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ContractError("matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) {
                c.at(i, j) += aik * b.at(k, j);
            }
        }
    }
    return c;
}

Matrix matmul_ta(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw ContractError("matmul_ta: inner dimensions differ");
    Matrix c(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        for (int i = 0; i < a.cols; ++i) {
            const double aki = a.at(k, i);
            if (aki == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) {
                c.at(i, j) += aki * b.at(k, j);
            }
        }
    }
    return c;
}

Matrix matmul_tb(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw ContractError("matmul_tb: inner dimensions differ");
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) {
                s += a.at(i, k) * b.at(j, k);
            }
            c.at(i, j) = s;
        }
    }
    return c;
}

} // namespace proseforge
