#include "typeforge/nn/mat.hpp"

#include <cmath>
#include <stdexcept>

namespace typeforge::nn {

void mm_nn(const Mat& A, const Mat& B, Mat& C, bool accumulate) {
    if (A.cols != B.rows) throw std::invalid_argument("mm_nn: inner dimensions differ");
    if (C.rows != A.rows || C.cols != B.cols) {
        C = Mat(A.rows, B.cols);
    } else if (!accumulate) {
        C.zero();
    }
    for (int i = 0; i < A.rows; ++i) {
        const double* arow = A.row_ptr(i);
        double* crow = C.row_ptr(i);
        for (int k = 0; k < A.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = B.row_ptr(k);
            for (int j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

void mm_nt(const Mat& A, const Mat& B, Mat& C, bool accumulate) {
    if (A.cols != B.cols) throw std::invalid_argument("mm_nt: inner dimensions differ");
    if (C.rows != A.rows || C.cols != B.rows) {
        C = Mat(A.rows, B.rows);
    } else if (!accumulate) {
        C.zero();
    }
    for (int i = 0; i < A.rows; ++i) {
        const double* arow = A.row_ptr(i);
        double* crow = C.row_ptr(i);
        for (int j = 0; j < B.rows; ++j) {
            const double* brow = B.row_ptr(j);
            double acc = 0.0;
            for (int k = 0; k < A.cols; ++k) acc += arow[k] * brow[k];
            crow[j] += acc;
        }
    }
}

void mm_tn(const Mat& A, const Mat& B, Mat& C, bool accumulate) {
    if (A.rows != B.rows) throw std::invalid_argument("mm_tn: inner dimensions differ");
    if (C.rows != A.cols || C.cols != B.cols) {
        C = Mat(A.cols, B.cols);
    } else if (!accumulate) {
        C.zero();
    }
    for (int i = 0; i < A.rows; ++i) {
        const double* arow = A.row_ptr(i);
        const double* brow = B.row_ptr(i);
        for (int k = 0; k < A.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            double* crow = C.row_ptr(k);
            for (int j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

bool all_finite(const Mat& m) {
    for (double v : m.a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace typeforge::nn
