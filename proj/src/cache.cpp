#include "flipeval/cache.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

namespace flipeval {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                    nullptr)) {
        throw CacheError("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

CompletionCache::CompletionCache(std::filesystem::path dir)
    : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
        throw CacheError("cannot create cache dir " + dir_.string() + ": " +
                         ec.message());
    }
}

std::optional<std::string> CompletionCache::get(const std::string& key) const {
    std::ifstream in(dir_ / (key + ".txt"), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw CacheError("cache read failed for key " + key);
    }
    return buf.str();
}

void CompletionCache::put(const std::string& key, const std::string& value) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    auto tmp = dir_ / (key + ".tmp");
    auto target = dir_ / (key + ".txt");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CacheError("cache write failed for key " + key);
        }
        out.write(value.data(), static_cast<std::streamsize>(value.size()));
        if (!out) {
            throw CacheError("cache write failed for key " + key);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        throw CacheError("cache rename failed for key " + key + ": " +
                         ec.message());
    }
}

std::size_t CompletionCache::entry_count() const {
    std::size_t count = 0;
    std::error_code ec;
    for (const auto& entry :
         std::filesystem::directory_iterator(dir_, ec)) {
        if (entry.path().extension() == ".txt") ++count;
    }
    return count;
}

std::string CompletionCache::key_for(const BackendConfig& cfg,
                                     const std::vector<ChatTurn>& messages) {
    nlohmann::json canon;
    canon["model"] = cfg.model_name;
    canon["temperature"] = cfg.temperature;
    canon["max_new_tokens"] = cfg.max_new_tokens;
    canon["messages"] = nlohmann::json::array();
    for (const auto& m : messages) {
        canon["messages"].push_back({{"role", to_string(m.role)},
                                     {"content", m.content}});
    }
    return sha256_hex(canon.dump());
}

std::string cached_complete(ChatBackend& backend,
                            const std::vector<ChatTurn>& messages,
                            CompletionCache* cache) {
    if (!cache) return backend.complete(messages);
    const std::string key = CompletionCache::key_for(backend.config(), messages);
    if (auto hit = cache->get(key)) return *hit;
    std::string completion = backend.complete(messages);
    cache->put(key, completion);
    return completion;
}

}  // namespace flipeval
