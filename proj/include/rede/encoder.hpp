#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rede/types.hpp"

namespace rede {

/// Text -> embedding contract. Implementations are deterministic for a fixed
/// configuration, keep a constant output dimension, and accept concurrent
/// calls.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  /// Throws PreconditionViolation on an empty batch, BackendUnavailable or
  /// DimMismatch from the backend.
  virtual std::vector<Vector> encode(std::span<const std::string> texts) const = 0;

  /// 0 until known (a remote backend learns it from its first response).
  virtual Eigen::Index dim() const = 0;

  Vector encode_one(const std::string& text) const;
};

/// 64-bit FNV-1a over the bytes of `token`.
std::uint64_t fnv1a64(std::string_view token);

/// Hashed bag of words: each token adds 1 at fnv1a64(token) mod dim, then the
/// vector is L2-normalized. Text without tokens maps to the zero vector.
class HashingEncoder final : public EncoderBackend {
 public:
  explicit HashingEncoder(Eigen::Index dim);

  std::vector<Vector> encode(std::span<const std::string> texts) const override;
  Eigen::Index dim() const override { return dim_; }

 private:
  Eigen::Index dim_;
};

struct HttpEncoderConfig {
  std::string url;  // e.g. http://127.0.0.1:8081/encode
  std::chrono::milliseconds timeout{30000};
  Eigen::Index expected_dim = 0;  // 0 = accept the first dim seen
};

/// POST {"texts": [...]} -> {"vectors": [[...], ...]}.
class HttpEncoder final : public EncoderBackend {
 public:
  explicit HttpEncoder(HttpEncoderConfig config);

  std::vector<Vector> encode(std::span<const std::string> texts) const override;
  Eigen::Index dim() const override;

 private:
  HttpEncoderConfig config_;
  mutable std::atomic<Eigen::Index> dim_{0};
};

}  // namespace rede
