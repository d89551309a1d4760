#include "rede/encoder.hpp"

#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"
#include "rede/corpus_io.hpp"
#include "rede/error.hpp"

namespace rede {

Vector EncoderBackend::encode_one(const std::string& text) const {
  auto out = encode(std::span<const std::string>(&text, 1));
  return std::move(out.front());
}

std::uint64_t fnv1a64(std::string_view token) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : token) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

HashingEncoder::HashingEncoder(Eigen::Index dim) : dim_(dim) {
  if (dim < 1) throw Error(ErrorCode::InvalidConfig, "encoder dim must be >= 1");
}

std::vector<Vector> HashingEncoder::encode(
    std::span<const std::string> texts) const {
  if (texts.empty()) {
    throw Error(ErrorCode::PreconditionViolation, "encode needs >= 1 text");
  }
  std::vector<Vector> out;
  out.reserve(texts.size());
  const auto buckets = static_cast<std::uint64_t>(dim_);
  for (const auto& text : texts) {
    Vector v = Vector::Zero(dim_);
    for (const auto& token : tokenize(text)) {
      v[static_cast<Eigen::Index>(fnv1a64(token) % buckets)] += 1.0f;
    }
    const float norm = v.norm();
    if (norm > 0.0f) v /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

HttpEncoder::HttpEncoder(HttpEncoderConfig config)
    : config_(std::move(config)), dim_(config_.expected_dim) {}

Eigen::Index HttpEncoder::dim() const { return dim_.load(); }

std::vector<Vector> HttpEncoder::encode(
    std::span<const std::string> texts) const {
  if (texts.empty()) {
    throw Error(ErrorCode::PreconditionViolation, "encode needs >= 1 text");
  }
  const auto [host, path] = detail::split_url(config_.url);
  httplib::Client client(host);
  const auto secs = config_.timeout.count() / 1000;
  const auto usecs = (config_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);

  nlohmann::json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::BackendUnavailable,
                "encoder at " + config_.url + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BackendUnavailable,
                "encoder at " + config_.url + " returned HTTP " +
                    std::to_string(res->status));
  }
  const auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("vectors") ||
      !reply["vectors"].is_array() || reply["vectors"].size() != texts.size()) {
    throw Error(ErrorCode::BackendUnavailable,
                "encoder reply lacks one vector per text");
  }
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& row : reply["vectors"]) {
    const auto values = row.get<std::vector<float>>();
    const auto d = static_cast<Eigen::Index>(values.size());
    if (d < 1) throw Error(ErrorCode::DimMismatch, "encoder returned an empty vector");
    Eigen::Index known = 0;
    if (!dim_.compare_exchange_strong(known, d) && known != d) {
      throw Error(ErrorCode::DimMismatch,
                  "encoder returned dim " + std::to_string(d) + ", expected " +
                      std::to_string(known));
    }
    out.push_back(Eigen::Map<const Vector>(values.data(), d));
  }
  return out;
}

}  // namespace rede
