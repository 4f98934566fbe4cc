#include "bibo/storage/kv_store.hpp"

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace bibo::storage {

void MemKvStore::put(const std::string& key,
                     const std::vector<std::uint8_t>& value) {
  std::lock_guard<std::mutex> lock(mu_);
  data_[key] = value;
}

Outcome<std::vector<std::uint8_t>> MemKvStore::get(const std::string& key) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = data_.find(key);
  if (it == data_.end()) return err(Errc::not_found, "no such key: " + key);
  return it->second;
}

bool MemKvStore::erase(const std::string& key) {
  std::lock_guard<std::mutex> lock(mu_);
  return data_.erase(key) > 0;
}

std::vector<std::string> MemKvStore::keys() {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  out.reserve(data_.size());
  for (const auto& [k, v] : data_) out.push_back(k);
  return out;
}

DirKvStore::DirKvStore(std::string dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string DirKvStore::path_for(const std::string& key) const {
  // Keys are ids generated by this system; keep filenames predictable.
  std::string safe;
  for (char c : key) {
    safe.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                           c == '_' || c == '.'
                       ? c
                       : '_');
  }
  return dir_ + "/" + safe + ".kv";
}

void DirKvStore::put(const std::string& key,
                     const std::vector<std::uint8_t>& value) {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_for(key), std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(value.data()),
            static_cast<std::streamsize>(value.size()));
}

Outcome<std::vector<std::uint8_t>> DirKvStore::get(const std::string& key) {
  std::lock_guard<std::mutex> lock(mu_);
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return err(Errc::not_found, "no such key: " + key);
  std::vector<std::uint8_t> value(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return value;
}

bool DirKvStore::erase(const std::string& key) {
  std::lock_guard<std::mutex> lock(mu_);
  return fs::remove(path_for(key));
}

std::vector<std::string> DirKvStore::keys() {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (!entry.is_regular_file()) continue;
    auto name = entry.path().filename().string();
    if (name.size() > 3 && name.ends_with(".kv")) {
      out.push_back(name.substr(0, name.size() - 3));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::shared_ptr<KvStore> open_dir_store(const std::string& dir) {
  return std::make_shared<DirKvStore>(dir);
}

}  // namespace bibo::storage
