// Copyright 2026 The qsimnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "qsimnet/errors.hpp"

namespace qsimnet {

/// Key-value blob store used as the data transmission hub between the agent
/// and the workers. Objects are immutable once written: a put on an existing
/// key is ignored, and put_if_absent is atomic per key -- exactly one
/// concurrent caller observes true.
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  virtual void put(const std::string& key, const std::string& bytes) = 0;
  virtual std::optional<std::string> get(const std::string& key) = 0;
  /// Keys starting with `prefix`, sorted.
  virtual std::vector<std::string> list(const std::string& prefix) = 0;
  /// True iff this call created the object.
  virtual bool put_if_absent(const std::string& key,
                             const std::string& bytes) = 0;
};

/// Mutex-guarded map. The store used by in-process tests.
class MemoryStore : public ObjectStore {
 public:
  void put(const std::string& key, const std::string& bytes) override {
    std::lock_guard<std::mutex> lock(mu_);
    objects_.emplace(key, bytes);  // no-op when the key exists
  }

  std::optional<std::string> get(const std::string& key) override {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = objects_.find(key);
    if (it == objects_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> list(const std::string& prefix) override {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> keys;
    for (auto it = objects_.lower_bound(prefix); it != objects_.end(); ++it) {
      if (it->first.compare(0, prefix.size(), prefix) != 0) break;
      keys.push_back(it->first);
    }
    return keys;
  }

  bool put_if_absent(const std::string& key,
                     const std::string& bytes) override {
    std::lock_guard<std::mutex> lock(mu_);
    return objects_.emplace(key, bytes).second;
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::string> objects_;
};

/// Filesystem-backed store for multi-process runs. Keys map to paths under
/// the root; writes go to a scratch file first and become visible through
/// link(2), so readers never observe partial content and create-exclusive
/// claims are atomic across processes on the same filesystem.
class DirectoryStore : public ObjectStore {
 public:
  explicit DirectoryStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / kScratchDir, ec);
    if (ec) {
      throw StoreError("cannot create store root " + root_.string() + ": " +
                       ec.message());
    }
  }

  void put(const std::string& key, const std::string& bytes) override {
    put_if_absent(key, bytes);
  }

  std::optional<std::string> get(const std::string& key) override {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (in.bad()) {
      throw StoreError("read failed for key " + key);
    }
    return bytes;
  }

  std::vector<std::string> list(const std::string& prefix) override {
    std::vector<std::string> keys;
    std::error_code ec;
    std::filesystem::recursive_directory_iterator it(root_, ec), end;
    if (ec) {
      throw StoreError("cannot list store root " + root_.string() + ": " +
                       ec.message());
    }
    for (; it != end; ++it) {
      if (it->is_directory()) {
        if (it->path().filename() == kScratchDir) it.disable_recursion_pending();
        continue;
      }
      std::string key =
          std::filesystem::relative(it->path(), root_).generic_string();
      if (key.compare(0, prefix.size(), prefix) == 0) {
        keys.push_back(std::move(key));
      }
    }
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  bool put_if_absent(const std::string& key,
                     const std::string& bytes) override {
    const auto target = path_for(key);
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
    if (ec) {
      throw StoreError("cannot create parent of key " + key);
    }
    const auto scratch =
        root_ / kScratchDir /
        (std::to_string(::getpid()) + "_" +
         std::to_string(reinterpret_cast<uintptr_t>(this)) + "_" +
         std::to_string(counter_.fetch_add(1)) + ".tmp");
    {
      std::ofstream out(scratch, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) {
        throw StoreError("write failed for key " + key);
      }
    }
    const int rc = ::link(scratch.c_str(), target.c_str());
    const int saved = errno;
    std::filesystem::remove(scratch, ec);
    if (rc == 0) return true;
    if (saved == EEXIST) return false;
    throw StoreError("link failed for key " + key + ": " +
                     std::strerror(saved));
  }

  const std::filesystem::path& root() const { return root_; }

 private:
  static constexpr const char* kScratchDir = ".scratch";

  std::filesystem::path path_for(const std::string& key) const {
    if (key.empty() || key.front() == '/' ||
        key.find("..") != std::string::npos) {
      throw StoreError("invalid key: " + key);
    }
    return root_ / std::filesystem::path(key);
  }

  std::filesystem::path root_;
  std::atomic<uint64_t> counter_{0};
};

}  // namespace qsimnet
