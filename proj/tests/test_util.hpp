#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "vge/ensemble.hpp"

namespace vge::testing {

inline EnsembleBatch batch_of(std::size_t samples, std::size_t members,
                              std::vector<double> data) {
  const std::size_t classes = data.size() / (samples * members);
  return EnsembleBatch::create(samples, members, classes, data);
}

// Dirichlet(alpha) rows, B x M x C.
inline std::vector<double> dirichlet_rows(std::mt19937_64& rng, std::size_t rows,
                                          std::size_t classes, double alpha = 1.0) {
  std::gamma_distribution<double> g(alpha, 1.0);
  std::vector<double> out(rows * classes);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += (out[r * classes + c] = g(rng) + 1e-300);
    for (std::size_t c = 0; c < classes; ++c) out[r * classes + c] /= total;
  }
  return out;
}

inline EnsembleBatch random_batch(std::mt19937_64& rng, std::size_t samples,
                                  std::size_t members, std::size_t classes,
                                  double alpha = 1.0) {
  return EnsembleBatch::create(samples, members, classes,
                               dirichlet_rows(rng, samples * members, classes, alpha));
}

}  // namespace vge::testing
