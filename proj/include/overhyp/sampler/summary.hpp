#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "overhyp/io/csv.hpp"
#include "overhyp/sampler/config.hpp"

namespace overhyp {

struct PosteriorSummary {
  Vector mean;
  Vector sd;
};

/// Pushes every draw through `constrain` and returns componentwise mean and
/// standard deviation (n - 1 denominator) in the constrained space.
template <class Constrain>
PosteriorSummary posterior_summary(const PosteriorDraws& draws, const Constrain& constrain) {
  PosteriorSummary s;
  std::size_t n = 0;
  Vector m2;
  for (const auto& chain : draws.chains) {
    for (Eigen::Index t = 0; t < chain.rows(); ++t) {
      const Vector x = constrain(Vector(chain.row(t).transpose()));
      if (n == 0) {
        s.mean = Vector::Zero(x.size());
        m2 = Vector::Zero(x.size());
      }
      ++n;
      const Vector delta = x - s.mean;
      s.mean += delta / static_cast<double>(n);
      m2 += delta.cwiseProduct(x - s.mean);
    }
  }
  s.sd = n > 1 ? Vector((m2 / static_cast<double>(n - 1)).cwiseSqrt()) : Vector::Zero(s.mean.size());
  return s;
}

/// Debug dump with header `chain,draw,dim0,...`.
inline std::string draws_to_csv(const PosteriorDraws& draws) {
  std::string out = "chain,draw";
  for (std::size_t d = 0; d < draws.dim(); ++d) out += ",dim" + std::to_string(d);
  out += '\n';
  for (std::size_t c = 0; c < draws.n_chains(); ++c) {
    const auto& m = draws.chains[c];
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      out += std::to_string(c) + "," + std::to_string(t);
      for (Eigen::Index d = 0; d < m.cols(); ++d) out += "," + io::format_double(m(t, d));
      out += '\n';
    }
  }
  return out;
}

}  // namespace overhyp
