#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace typeforge::nn {

// Dense row-major matrix of doubles. Row vectors are 1 x n.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}
    Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), a(std::move(data)) {
        assert(a.size() == static_cast<size_t>(r) * static_cast<size_t>(c));
    }

    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    double* row_ptr(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row_ptr(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return a.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// C (+)= A * B
void mm_nn(const Mat& A, const Mat& B, Mat& C, bool accumulate);
// C (+)= A * B^T
void mm_nt(const Mat& A, const Mat& B, Mat& C, bool accumulate);
// C (+)= A^T * B
void mm_tn(const Mat& A, const Mat& B, Mat& C, bool accumulate);

bool all_finite(const Mat& m);

} // namespace typeforge::nn
