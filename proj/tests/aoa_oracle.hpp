#pragma once

// Attention-over-attention written out with scalar loops: M = C_F C_L^T,
// row-softmax alpha, column-softmax beta, then the compress and reweight step.

#include <cmath>
#include <vector>

#include "mlmn/model/config.hpp"
#include "mlmn/numerics/tensor.hpp"

namespace mlmn::testing {

    using model::AoaDirection;
    using model::CompressOp;

    struct OracleAoa {
        std::vector<double> nu, omega;
    };

    OracleAoa oracle_aoa(const Tensor& cf, const Tensor& cl, AoaDirection dir, CompressOp op) {
        const std::size_t m = cf.rows(), n = cl.rows(), w = cf.cols();
        std::vector<std::vector<double>> M(m, std::vector<double>(n, 0.0)), a = M, b = M;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = 0; k < w; ++k) M[i][j] += cf.at(i, k) * cl.at(j, k);
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            double z = 0;
            for (std::size_t k = 0; k < n; ++k) z += std::exp(M[i][k]);
            for (std::size_t j = 0; j < n; ++j) a[i][j] = std::exp(M[i][j]) / z;
        }
        for (std::size_t j = 0; j < n; ++j) {
            double z = 0;
            for (std::size_t k = 0; k < m; ++k) z += std::exp(M[k][j]);
            for (std::size_t i = 0; i < m; ++i) b[i][j] = std::exp(M[i][j]) / z;
        }
        OracleAoa o;
        if (dir == AoaDirection::fact_to_article) {
            o.nu.assign(m, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t k = 0; k < n; ++k) o.nu[i] += b[i][k];
                if (op == CompressOp::avg) o.nu[i] /= static_cast<double>(n);
            }
            o.omega.assign(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < m; ++i) o.omega[j] += o.nu[i] * a[i][j];
            }
        } else {
            o.nu.assign(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = 0; k < m; ++k) o.nu[j] += a[k][j];
                if (op == CompressOp::avg) o.nu[j] /= static_cast<double>(m);
            }
            o.omega.assign(m, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) o.omega[i] += b[i][j] * o.nu[j];
            }
        }
        return o;
    }

}  // namespace mlmn::testing
