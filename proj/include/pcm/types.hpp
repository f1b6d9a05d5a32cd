#ifndef PCM_TYPES_HPP_
#define PCM_TYPES_HPP_

#include <cstdint>

#include <Eigen/Core>

namespace pcm {

// Row-major so that a batch of samples is a contiguous block of rows, and
// so that checkpoint/dataset payloads can be written straight from data().
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Index = Eigen::Index;

}  // namespace pcm

#endif  // PCM_TYPES_HPP_
