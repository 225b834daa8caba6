#pragma once

#include <vector>

#include "oracles.hpp"
#include "safefl/model_vector.hpp"
#include "safefl/tensor.hpp"

namespace support {

inline safefl::Tensor to_tensor(const oracle::Mat& m) {
    std::vector<double> flat;
    for (const oracle::Vec& r : m) flat.insert(flat.end(), r.begin(), r.end());
    return safefl::Tensor::matrix(m.size(), m.empty() ? 0 : m[0].size(), std::move(flat));
}

inline oracle::Mat to_mat(const safefl::Tensor& t) {
    oracle::Mat out(t.rows(), oracle::Vec(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) out[i][j] = t.at(i, j);
    return out;
}

inline oracle::Vec flat(const safefl::Tensor& t) { return t.values(); }

inline std::vector<safefl::ModelVector> to_models(const oracle::Mat& m) {
    std::vector<safefl::ModelVector> out;
    for (const oracle::Vec& r : m) out.emplace_back(r);
    return out;
}

}  // namespace support
