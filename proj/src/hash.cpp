#include "eqlab/hash.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <vector>

#include "eqlab/error.hpp"

namespace eqlab {

struct Sha256::State {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : state_(std::make_unique<State>()) {
  state_->ctx = EVP_MD_CTX_new();
  if (!state_->ctx || EVP_DigestInit_ex(state_->ctx, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Numeric, "SHA-256 initialisation failed");
}

Sha256::~Sha256() { EVP_MD_CTX_free(state_->ctx); }

Sha256& Sha256::update(std::span<const std::byte> bytes) {
  EVP_DigestUpdate(state_->ctx, bytes.data(), bytes.size());
  return *this;
}

Sha256& Sha256::update(std::string_view text) {
  return update(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

Sha256& Sha256::update(std::span<const double> values) {
  static_assert(std::endian::native == std::endian::little, "hash assumes little-endian doubles");
  return update(std::as_bytes(values));
}

Sha256& Sha256::update(double value) { return update(std::span<const double>(&value, 1)); }

Sha256& Sha256::update(std::int64_t value) {
  return update(std::as_bytes(std::span<const std::int64_t>(&value, 1)));
}

std::string Sha256::hex() {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(state_->ctx, md, &len);
  static const char* digits = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned i = 0; i < len; ++i) {
    out[2 * i] = digits[md[i] >> 4];
    out[2 * i + 1] = digits[md[i] & 15];
  }
  return out;
}

std::string sha256_hex(std::string_view text) { return Sha256().update(text).hex(); }

}  // namespace eqlab
