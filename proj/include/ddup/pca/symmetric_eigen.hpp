// Copyright 2026-present the ddup authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "ddup/core/error.hpp"

namespace ddup {

/// Eigenpairs of a real symmetric matrix, sorted by descending eigenvalue.
/// Row i of `vectors` (n x n, row-major) is the unit eigenvector of values[i].
struct SymmetricEigen {
    size_t n = 0;
    std::vector<double> values;
    std::vector<double> vectors;
};

namespace detail {

// Householder tridiagonalisation followed by implicit QL (EISPACK tred2/tql2).
// The eigenvector matrix is kept transposed so every inner loop walks
// contiguous memory; v(r, c) addresses element (r, c) of the textbook V.
class TridiagonalQl {
public:
    TridiagonalQl(std::vector<double> a, size_t n) : n_(n), w_(std::move(a)), d_(n), e_(n) {
    }

    void
    run() {
        if (n_ == 0) {
            return;
        }
        tred2();
        tql2();
    }

    std::vector<double>&
    eigenvalues() {
        return d_;
    }

    // Row-major: row i holds eigenvector i (column i of V).
    std::vector<double>&
    eigenvectors_by_row() {
        return w_;
    }

private:
    double&
    v(size_t r, size_t c) {
        return w_[c * n_ + r];
    }

    void
    tred2() {
        const size_t n = n_;
        for (size_t j = 0; j < n; ++j) {
            d_[j] = v(n - 1, j);
        }
        for (size_t i = n - 1; i > 0; --i) {
            double scale = 0.0;
            double h = 0.0;
            for (size_t k = 0; k < i; ++k) {
                scale += std::abs(d_[k]);
            }
            if (scale == 0.0) {
                e_[i] = d_[i - 1];
                for (size_t j = 0; j < i; ++j) {
                    d_[j] = v(i - 1, j);
                    v(i, j) = 0.0;
                    v(j, i) = 0.0;
                }
            } else {
                for (size_t k = 0; k < i; ++k) {
                    d_[k] /= scale;
                    h += d_[k] * d_[k];
                }
                double f = d_[i - 1];
                double g = std::sqrt(h);
                if (f > 0) {
                    g = -g;
                }
                e_[i] = scale * g;
                h -= f * g;
                d_[i - 1] = f - g;
                for (size_t j = 0; j < i; ++j) {
                    e_[j] = 0.0;
                }
                for (size_t j = 0; j < i; ++j) {
                    f = d_[j];
                    v(j, i) = f;
                    g = e_[j] + v(j, j) * f;
                    const double* col = &w_[j * n];
                    for (size_t k = j + 1; k + 1 <= i; ++k) {
                        g += col[k] * d_[k];
                        e_[k] += col[k] * f;
                    }
                    e_[j] = g;
                }
                f = 0.0;
                for (size_t j = 0; j < i; ++j) {
                    e_[j] /= h;
                    f += e_[j] * d_[j];
                }
                const double hh = f / (h + h);
                for (size_t j = 0; j < i; ++j) {
                    e_[j] -= hh * d_[j];
                }
                for (size_t j = 0; j < i; ++j) {
                    f = d_[j];
                    g = e_[j];
                    double* col = &w_[j * n];
                    for (size_t k = j; k + 1 <= i; ++k) {
                        col[k] -= (f * e_[k] + g * d_[k]);
                    }
                    d_[j] = v(i - 1, j);
                    v(i, j) = 0.0;
                }
            }
            d_[i] = h;
        }

        // Accumulate transformations.
        for (size_t i = 0; i + 1 < n; ++i) {
            v(n - 1, i) = v(i, i);
            v(i, i) = 1.0;
            const double h = d_[i + 1];
            double* next = &w_[(i + 1) * n];
            if (h != 0.0) {
                for (size_t k = 0; k <= i; ++k) {
                    d_[k] = next[k] / h;
                }
                for (size_t j = 0; j <= i; ++j) {
                    double* col = &w_[j * n];
                    double g = 0.0;
                    for (size_t k = 0; k <= i; ++k) {
                        g += next[k] * col[k];
                    }
                    for (size_t k = 0; k <= i; ++k) {
                        col[k] -= g * d_[k];
                    }
                }
            }
            for (size_t k = 0; k <= i; ++k) {
                next[k] = 0.0;
            }
        }
        for (size_t j = 0; j < n; ++j) {
            d_[j] = v(n - 1, j);
            v(n - 1, j) = 0.0;
        }
        v(n - 1, n - 1) = 1.0;
        e_[0] = 0.0;
    }

    void
    tql2() {
        const size_t n = n_;
        for (size_t i = 1; i < n; ++i) {
            e_[i - 1] = e_[i];
        }
        e_[n - 1] = 0.0;

        double f = 0.0;
        double tst1 = 0.0;
        const double eps = std::ldexp(1.0, -52);
        for (size_t l = 0; l < n; ++l) {
            tst1 = std::max(tst1, std::abs(d_[l]) + std::abs(e_[l]));
            size_t m = l;
            while (m < n) {
                if (std::abs(e_[m]) <= eps * tst1) {
                    break;
                }
                ++m;
            }
            if (m > l) {
                size_t iter = 0;
                do {
                    require(++iter < 300, ErrorCode::kDiverged, "eigen solver failed to converge");
                    double g = d_[l];
                    double p = (d_[l + 1] - g) / (2.0 * e_[l]);
                    double r = std::hypot(p, 1.0);
                    if (p < 0) {
                        r = -r;
                    }
                    d_[l] = e_[l] / (p + r);
                    d_[l + 1] = e_[l] * (p + r);
                    const double dl1 = d_[l + 1];
                    double h = g - d_[l];
                    for (size_t i = l + 2; i < n; ++i) {
                        d_[i] -= h;
                    }
                    f += h;

                    p = d_[m];
                    double c = 1.0;
                    double c2 = c;
                    double c3 = c;
                    const double el1 = e_[l + 1];
                    double s = 0.0;
                    double s2 = 0.0;
                    for (size_t i = m; i-- > l;) {
                        c3 = c2;
                        c2 = c;
                        s2 = s;
                        g = c * e_[i];
                        h = c * p;
                        r = std::hypot(p, e_[i]);
                        e_[i + 1] = s * r;
                        s = e_[i] / r;
                        c = p / r;
                        p = c * d_[i] - s * g;
                        d_[i + 1] = h + s * (c * g + s * d_[i]);
                        double* vi = &w_[i * n];
                        double* vi1 = &w_[(i + 1) * n];
                        for (size_t k = 0; k < n; ++k) {
                            const double t = vi1[k];
                            vi1[k] = s * vi[k] + c * t;
                            vi[k] = c * vi[k] - s * t;
                        }
                    }
                    p = -s * s2 * c3 * el1 * e_[l] / dl1;
                    e_[l] = s * p;
                    d_[l] = c * p;
                } while (std::abs(e_[l]) > eps * tst1);
            }
            d_[l] += f;
            e_[l] = 0.0;
        }
    }

    size_t n_;
    std::vector<double> w_;
    std::vector<double> d_;
    std::vector<double> e_;
};

}  // namespace detail

/// Full eigendecomposition of the symmetric n x n matrix `a` (row-major).
/// Only the upper triangle needs to be meaningful; it is mirrored first.
inline SymmetricEigen
symmetric_eigen(std::vector<double> a, size_t n) {
    require(a.size() == n * n, ErrorCode::kDimensionMismatch, "symmetric_eigen: matrix size mismatch");
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            a[j * n + i] = a[i * n + j];
        }
    }
    detail::TridiagonalQl solver(std::move(a), n);
    solver.run();

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    const auto& vals = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) { return vals[x] > vals[y]; });

    SymmetricEigen out;
    out.n = n;
    out.values.resize(n);
    out.vectors.resize(n * n);
    const auto& vecs = solver.eigenvectors_by_row();
    for (size_t r = 0; r < n; ++r) {
        out.values[r] = vals[order[r]];
        std::copy_n(&vecs[order[r] * n], n, &out.vectors[r * n]);
    }
    return out;
}

}  // namespace ddup
