#pragma once

#include <cstddef>
#include <vector>

namespace trire {

// Dense row-major matrix of doubles. Exported operations keep every value
// finite and throw ShapeError on dimension mismatch.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // row-major, length rows*cols

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return rows * cols; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b and a * b^T without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// Row vector holding the per-column sum of a.
std::vector<double> col_sum(const Matrix& a);

void check_finite(const Matrix& a, const char* what);

} // namespace trire
