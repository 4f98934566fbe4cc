#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "bibo/domain/errors.hpp"

namespace bibo::storage {

/// Embedded key-value store abstraction standing in for a managed NoSQL
/// database. Values are raw bytes; callers decide the encoding.
class KvStore {
 public:
  virtual ~KvStore() = default;
  virtual void put(const std::string& key,
                   const std::vector<std::uint8_t>& value) = 0;
  virtual Outcome<std::vector<std::uint8_t>> get(const std::string& key) = 0;
  virtual bool erase(const std::string& key) = 0;
  virtual std::vector<std::string> keys() = 0;
};

class MemKvStore final : public KvStore {
 public:
  void put(const std::string& key,
           const std::vector<std::uint8_t>& value) override;
  Outcome<std::vector<std::uint8_t>> get(const std::string& key) override;
  bool erase(const std::string& key) override;
  std::vector<std::string> keys() override;

 private:
  std::mutex mu_;
  std::map<std::string, std::vector<std::uint8_t>> data_;
};

/// One file per key inside a directory.
class DirKvStore final : public KvStore {
 public:
  explicit DirKvStore(std::string dir);
  void put(const std::string& key,
           const std::vector<std::uint8_t>& value) override;
  Outcome<std::vector<std::uint8_t>> get(const std::string& key) override;
  bool erase(const std::string& key) override;
  std::vector<std::string> keys() override;

 private:
  std::string path_for(const std::string& key) const;
  std::string dir_;
  std::mutex mu_;
};

std::shared_ptr<KvStore> open_dir_store(const std::string& dir);

}  // namespace bibo::storage
