#pragma once
// SHA-256 content hashing for cache keys and lineage tags.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace eqlab {

class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::byte> bytes);
  Sha256& update(std::string_view text);
  Sha256& update(std::span<const double> values);  // bit patterns, little endian
  Sha256& update(double value);
  Sha256& update(std::int64_t value);
  /// Lower-case hex digest; the hasher cannot be reused afterwards.
  std::string hex();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::string sha256_hex(std::string_view text);

}  // namespace eqlab
