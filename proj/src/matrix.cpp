#include "trire/matrix.hpp"

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "trire/errors.hpp"

namespace trire {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using MutMap = Eigen::Map<EigenRowMajor>;

ConstMap map_of(const Matrix& m) {
    return ConstMap(m.data.data(), static_cast<Eigen::Index>(m.rows),
                    static_cast<Eigen::Index>(m.cols));
}

} // namespace

void check_finite(const Matrix& a, const char* what) {
    for (double v : a.data) {
        if (!std::isfinite(v)) {
            throw InputError(std::string(what) + ": non-finite value");
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows));
    }
    Matrix out(a.rows, b.cols);
    MutMap(out.data.data(), static_cast<Eigen::Index>(out.rows),
           static_cast<Eigen::Index>(out.cols))
        .noalias() = map_of(a) * map_of(b);
    check_finite(out, "matmul");
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw ShapeError("matmul_tn: inner dimensions " + std::to_string(a.rows) +
                         " vs " + std::to_string(b.rows));
    }
    Matrix out(a.cols, b.cols);
    MutMap(out.data.data(), static_cast<Eigen::Index>(out.rows),
           static_cast<Eigen::Index>(out.cols))
        .noalias() = map_of(a).transpose() * map_of(b);
    check_finite(out, "matmul_tn");
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw ShapeError("matmul_nt: inner dimensions " + std::to_string(a.cols) +
                         " vs " + std::to_string(b.cols));
    }
    Matrix out(a.rows, b.rows);
    MutMap(out.data.data(), static_cast<Eigen::Index>(out.rows),
           static_cast<Eigen::Index>(out.cols))
        .noalias() = map_of(a) * map_of(b).transpose();
    check_finite(out, "matmul_nt");
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (std::size_t r = 0; r < a.rows; ++r) {
        for (std::size_t c = 0; c < a.cols; ++c) {
            out(c, r) = a(r, c);
        }
    }
    return out;
}

std::vector<double> col_sum(const Matrix& a) {
    std::vector<double> s(a.cols, 0.0);
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* row = a.row_ptr(r);
        for (std::size_t c = 0; c < a.cols; ++c) {
            s[c] += row[c];
        }
    }
    return s;
}

} // namespace trire
