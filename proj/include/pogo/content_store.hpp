#ifndef POGO_CONTENT_STORE_HPP
#define POGO_CONTENT_STORE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "pogo/bytes.hpp"
#include "pogo/hash.hpp"

namespace pogo {

// In-process stand-in for IPFS: a content-addressed map plus a per-publisher
// withholding mask. Fetch either returns bytes that hash to the key or
// nothing; wrong bytes can never come back silently.
class ContentStore {
public:
    Hash256 put(Bytes bytes, const std::string& publisher) {
        Hash256 h = sha256(bytes);
        data_[h] = std::move(bytes);
        publisher_[h] = publisher;
        return h;
    }

    std::optional<Bytes> fetch(const Hash256& h) const {
        auto it = data_.find(h);
        if (it == data_.end()) return std::nullopt;
        auto pub = publisher_.find(h);
        if (pub != publisher_.end() && withheld_.count(pub->second)) return std::nullopt;
        return it->second;
    }

    bool contains(const Hash256& h) const { return fetch(h).has_value(); }

    // Simulates a node refusing to serve anything it published.
    void set_withholding(const std::string& publisher, bool withheld) {
        if (withheld)
            withheld_.insert(publisher);
        else
            withheld_.erase(publisher);
    }

private:
    std::map<Hash256, Bytes> data_;
    std::map<Hash256, std::string> publisher_;
    std::set<std::string> withheld_;
};

} // namespace pogo

#endif // POGO_CONTENT_STORE_HPP
