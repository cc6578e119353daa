#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "flipeval/backend.hpp"

namespace flipeval {

class CacheError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// SHA-256 hex digest (lowercase) of arbitrary bytes.
std::string sha256_hex(std::string_view data);

/// Single-directory completion store: one UTF-8 file per entry, named by the
/// lowercase hex key. Writes go through a temp file + rename, so a torn write
/// can corrupt at most its own entry.
class CompletionCache {
public:
    explicit CompletionCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& value);
    std::size_t entry_count() const;
    const std::filesystem::path& dir() const { return dir_; }

    /// Key = sha256 of (model, temperature, max_new_tokens, canonical
    /// serialization of the messages). Parser changes never invalidate it.
    static std::string key_for(const BackendConfig& cfg,
                               const std::vector<ChatTurn>& messages);

private:
    std::filesystem::path dir_;
    mutable std::mutex write_mutex_;
};

/// complete() with a read-through cache; cache == nullptr degrades to a
/// plain call. On a hit no backend call is made.
std::string cached_complete(ChatBackend& backend,
                            const std::vector<ChatTurn>& messages,
                            CompletionCache* cache);

}  // namespace flipeval
