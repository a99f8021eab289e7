#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lfscuc/network.hpp"

namespace lfscuc::testutil {

// Random connected weighted graph: spanning tree plus a few chords.
inline Eigen::MatrixXd random_laplacian(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> w(0.5, 5.0);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  auto add = [&](int i, int j) {
    double b = w(rng);
    L(i, j) -= b;
    L(j, i) -= b;
    L(i, i) += b;
    L(j, j) += b;
  };
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    add(i, pick(rng));
  }
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int k = 0; k < n; ++k) {
    int i = node(rng), j = node(rng);
    if (i != j && L(i, j) == 0.0) add(i, j);
  }
  return L;
}

inline ReducedNetwork as_network(const Eigen::MatrixXd& L) {
  ReducedNetwork net;
  for (int i = 0; i < L.rows(); ++i) net.bus_ids.push_back(i + 1);
  net.laplacian = L;
  return net;
}

}  // namespace lfscuc::testutil
