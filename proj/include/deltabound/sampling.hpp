#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "deltabound/errors.hpp"
#include "deltabound/random.hpp"
#include "deltabound/vector_ops.hpp"

namespace deltabound {

enum class SamplerKind { normal, dct };

struct ImageShape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * height * width; }
};

struct SamplerConfig {
  SamplerKind kind = SamplerKind::normal;
  double rho = 1.0;  // dct only
  ImageShape shape;  // dct only

  void check() const {
    if (kind != SamplerKind::dct) return;
    if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("rho must lie in (0, 1]");
    if (shape.channels == 0 || shape.height == 0 || shape.width == 0) {
      throw InvalidArgument("dct sampler needs channels, height and width >= 1");
    }
  }
};

enum class PSchedule { constant, linear, sqrt, log };

inline PSchedule parse_p_schedule(std::string_view s) {
  if (s == "const") return PSchedule::constant;
  if (s == "linear") return PSchedule::linear;
  if (s == "sqrt") return PSchedule::sqrt;
  if (s == "log") return PSchedule::log;
  throw InvalidArgument("unknown p(t) schedule '" + std::string(s) + "'");
}

inline std::string_view p_schedule_name(PSchedule s) {
  switch (s) {
    case PSchedule::constant: return "const";
    case PSchedule::linear: return "linear";
    case PSchedule::sqrt: return "sqrt";
    case PSchedule::log: return "log";
  }
  return "?";
}

// Perturbation scale p(t). The log schedule uses the natural logarithm.
inline double p_value(PSchedule s, std::size_t t) {
  const double tt = static_cast<double>(t);
  switch (s) {
    case PSchedule::constant: return 1.0;
    case PSchedule::linear: return 1.0 / (tt + 1.0);
    case PSchedule::sqrt: return 1.0 / std::sqrt(tt + 1.0);
    case PSchedule::log: return 1.0 / std::log(tt + 2.0);
  }
  return 1.0;
}

inline Vector sample_normal(std::size_t dim, Rng& rng) {
  if (dim == 0) throw InvalidArgument("sample_normal: dim must be >= 1");
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector z(dim);
  for (auto& v : z) v = n01(rng);
  return z;
}

// Orthonormal DCT-II basis: row k holds alpha_k * cos(pi (2n + 1) k / 2N).
inline Eigen::MatrixXd dct_basis(std::size_t n) {
  Eigen::MatrixXd c(n, n);
  const double N = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / N) : std::sqrt(2.0 / N);
    for (std::size_t i = 0; i < n; ++i) {
      c(k, i) = alpha * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * N));
    }
  }
  return c;
}

inline Eigen::MatrixXd dct2(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("dct2: empty matrix");
  return dct_basis(x.rows()) * x * dct_basis(x.cols()).transpose();
}

inline Eigen::MatrixXd idct2(const Eigen::MatrixXd& c) {
  if (c.rows() == 0 || c.cols() == 0) throw InvalidArgument("idct2: empty matrix");
  return dct_basis(c.rows()).transpose() * c * dct_basis(c.cols());
}

// Side lengths of the kept low-frequency block; at least the DC coefficient.
inline std::size_t kept_extent(double rho, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::floor(rho * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

// Low-pass random direction: per channel, {-1, 0, 1} coefficients in the
// kept block, inverse-transformed. Output is (channel, row, col) ordered.
inline Vector sample_dct(const SamplerConfig& cfg, Rng& rng) {
  if (cfg.kind != SamplerKind::dct) throw InvalidArgument("sample_dct: sampler kind is not dct");
  cfg.check();
  const std::size_t H = cfg.shape.height, W = cfg.shape.width;
  const std::size_t kh = kept_extent(cfg.rho, H), kw = kept_extent(cfg.rho, W);
  const Eigen::MatrixXd ch = dct_basis(H).transpose();
  const Eigen::MatrixXd cw = dct_basis(W);
  std::uniform_int_distribution<int> ternary(-1, 1);
  Vector out;
  out.reserve(cfg.shape.size());
  for (std::size_t c = 0; c < cfg.shape.channels; ++c) {
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(H, W);
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) coef(i, j) = ternary(rng);
    }
    const Eigen::MatrixXd img = ch * coef * cw;
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) out.push_back(img(i, j));
    }
  }
  return out;
}

// Raw (unscaled) direction z from the configured sampler, redrawn until it
// has nonzero norm.
inline Vector sample_direction(const SamplerConfig& cfg, std::size_t dim, Rng& rng) {
  if (cfg.kind == SamplerKind::normal) return sample_normal(dim, rng);
  if (cfg.shape.size() != dim) {
    throw DimensionMismatch("dct sampler shape has " + std::to_string(cfg.shape.size()) +
                            " entries, input has " + std::to_string(dim));
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vector z = sample_dct(cfg, rng);
    if (norm(z) > 0.0) return z;
  }
  throw InvalidArgument("dct sampler kept producing zero vectors");
}

}  // namespace deltabound
