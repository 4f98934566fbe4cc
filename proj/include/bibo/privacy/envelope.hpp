#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "bibo/domain/errors.hpp"

namespace bibo::privacy {

using Bytes = std::vector<std::uint8_t>;

/// Per-record envelope: the payload is sealed under a fresh data key,
/// the data key travels wrapped under the named master key.
struct EnvelopeCiphertext {
  std::string key_id;
  Bytes wrapped_data_key;  // wrap nonce || AEAD(data key)
  Bytes nonce;
  Bytes ciphertext;
};

/// Compact binary framing for storage at rest. Nothing inside is
/// plaintext except the master key id and the frame itself.
Bytes serialize(const EnvelopeCiphertext& ct);
Outcome<EnvelopeCiphertext> deserialize(const Bytes& raw);

/// Local stand-in for the provider-held key management service. Master
/// keys never leave it; records carry only the key id.
class KeyService {
 public:
  KeyService();

  /// Creates (or returns) the master key for an id.
  std::string ensure_master_key(const std::string& key_id);

  /// Deterministic master key derived from a passphrase, for stores
  /// that must be reopened across processes.
  void install_master_key(const std::string& key_id,
                          const std::string& passphrase);

  Outcome<EnvelopeCiphertext> encrypt(const Bytes& plaintext,
                                      const std::string& key_id) const;
  Outcome<Bytes> decrypt(const EnvelopeCiphertext& ct) const;

  Outcome<EnvelopeCiphertext> encrypt(const std::string& plaintext,
                                      const std::string& key_id) const {
    return encrypt(Bytes(plaintext.begin(), plaintext.end()), key_id);
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, Bytes> master_keys_;
};

}  // namespace bibo::privacy
