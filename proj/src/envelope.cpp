#include "bibo/privacy/envelope.hpp"

#include <cstring>

#include <sodium.h>

namespace bibo::privacy {

namespace {

constexpr std::uint32_t kMagic = 0x42564531;  // "BVE1"
constexpr std::size_t kKeyBytes = crypto_aead_xchacha20poly1305_ietf_KEYBYTES;
constexpr std::size_t kNonceBytes =
    crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

bool get_u32(const Bytes& in, std::size_t& pos, std::uint32_t& v) {
  if (pos + 4 > in.size()) return false;
  v = (std::uint32_t(in[pos]) << 24) | (std::uint32_t(in[pos + 1]) << 16) |
      (std::uint32_t(in[pos + 2]) << 8) | std::uint32_t(in[pos + 3]);
  pos += 4;
  return true;
}

void put_blob(Bytes& out, const Bytes& blob) {
  put_u32(out, static_cast<std::uint32_t>(blob.size()));
  out.insert(out.end(), blob.begin(), blob.end());
}

bool get_blob(const Bytes& in, std::size_t& pos, Bytes& blob) {
  std::uint32_t len = 0;
  if (!get_u32(in, pos, len)) return false;
  if (pos + len > in.size()) return false;
  blob.assign(in.begin() + pos, in.begin() + pos + len);
  pos += len;
  return true;
}

Bytes aead_seal(const Bytes& plaintext, const Bytes& key, const Bytes& nonce) {
  Bytes out(plaintext.size() + crypto_aead_xchacha20poly1305_ietf_ABYTES);
  unsigned long long out_len = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(
      out.data(), &out_len, plaintext.data(), plaintext.size(), nullptr, 0,
      nullptr, nonce.data(), key.data());
  out.resize(out_len);
  return out;
}

bool aead_open(const Bytes& ciphertext, const Bytes& key, const Bytes& nonce,
               Bytes& plaintext) {
  if (ciphertext.size() < crypto_aead_xchacha20poly1305_ietf_ABYTES) {
    return false;
  }
  plaintext.resize(ciphertext.size() -
                   crypto_aead_xchacha20poly1305_ietf_ABYTES);
  unsigned long long out_len = 0;
  const int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
      plaintext.data(), &out_len, nullptr, ciphertext.data(),
      ciphertext.size(), nullptr, 0, nonce.data(), key.data());
  if (rc != 0) return false;
  plaintext.resize(out_len);
  return true;
}

Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  randombytes_buf(out.data(), out.size());
  return out;
}

}  // namespace

Bytes serialize(const EnvelopeCiphertext& ct) {
  Bytes out;
  put_u32(out, kMagic);
  put_blob(out, Bytes(ct.key_id.begin(), ct.key_id.end()));
  put_blob(out, ct.wrapped_data_key);
  put_blob(out, ct.nonce);
  put_blob(out, ct.ciphertext);
  return out;
}

Outcome<EnvelopeCiphertext> deserialize(const Bytes& raw) {
  std::size_t pos = 0;
  std::uint32_t magic = 0;
  if (!get_u32(raw, pos, magic) || magic != kMagic) {
    return err(Errc::invalid_input, "not an envelope frame");
  }
  EnvelopeCiphertext ct;
  Bytes key_id;
  if (!get_blob(raw, pos, key_id) || !get_blob(raw, pos, ct.wrapped_data_key) ||
      !get_blob(raw, pos, ct.nonce) || !get_blob(raw, pos, ct.ciphertext)) {
    return err(Errc::invalid_input, "truncated envelope frame");
  }
  ct.key_id.assign(key_id.begin(), key_id.end());
  return ct;
}

KeyService::KeyService() {
  if (sodium_init() < 0) {
    throw std::runtime_error("libsodium initialization failed");
  }
}

std::string KeyService::ensure_master_key(const std::string& key_id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = master_keys_.find(key_id);
  if (it == master_keys_.end()) {
    master_keys_.emplace(key_id, random_bytes(kKeyBytes));
  }
  return key_id;
}

void KeyService::install_master_key(const std::string& key_id,
                                    const std::string& passphrase) {
  Bytes key(kKeyBytes);
  crypto_generichash(key.data(), key.size(),
                     reinterpret_cast<const unsigned char*>(passphrase.data()),
                     passphrase.size(), nullptr, 0);
  std::lock_guard<std::mutex> lock(mu_);
  master_keys_[key_id] = std::move(key);
}

Outcome<EnvelopeCiphertext> KeyService::encrypt(
    const Bytes& plaintext, const std::string& key_id) const {
  Bytes master;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = master_keys_.find(key_id);
    if (it == master_keys_.end()) {
      return err(Errc::not_found, "unknown master key: " + key_id);
    }
    master = it->second;
  }
  EnvelopeCiphertext ct;
  ct.key_id = key_id;
  const Bytes data_key = random_bytes(kKeyBytes);
  ct.nonce = random_bytes(kNonceBytes);
  ct.ciphertext = aead_seal(plaintext, data_key, ct.nonce);
  const Bytes wrap_nonce = random_bytes(kNonceBytes);
  Bytes wrapped = aead_seal(data_key, master, wrap_nonce);
  ct.wrapped_data_key = wrap_nonce;
  ct.wrapped_data_key.insert(ct.wrapped_data_key.end(), wrapped.begin(),
                             wrapped.end());
  return ct;
}

Outcome<Bytes> KeyService::decrypt(const EnvelopeCiphertext& ct) const {
  Bytes master;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = master_keys_.find(ct.key_id);
    if (it == master_keys_.end()) {
      return err(Errc::not_found, "unknown master key: " + ct.key_id);
    }
    master = it->second;
  }
  if (ct.wrapped_data_key.size() < kNonceBytes) {
    return err(Errc::crypto, "wrapped key truncated");
  }
  const Bytes wrap_nonce(ct.wrapped_data_key.begin(),
                         ct.wrapped_data_key.begin() + kNonceBytes);
  const Bytes wrapped(ct.wrapped_data_key.begin() + kNonceBytes,
                      ct.wrapped_data_key.end());
  Bytes data_key;
  if (!aead_open(wrapped, master, wrap_nonce, data_key) ||
      data_key.size() != kKeyBytes) {
    return err(Errc::crypto, "data key unwrap failed");
  }
  if (ct.nonce.size() != kNonceBytes) {
    return err(Errc::crypto, "bad nonce length");
  }
  Bytes plaintext;
  if (!aead_open(ct.ciphertext, data_key, ct.nonce, plaintext)) {
    return err(Errc::crypto, "authenticated decryption failed");
  }
  return plaintext;
}

}  // namespace bibo::privacy
