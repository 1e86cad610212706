#ifndef POGO_MERKLE_HPP
#define POGO_MERKLE_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pogo/bytes.hpp"
#include "pogo/hash.hpp"

namespace pogo {

// Domain separation: leaves hash as H(0x00 || leafIndex || leafBytes) with
// the index bound in (no leaf transplantation), internals as
// H(0x01 || left || right). Odd nodes pair with a duplicate of themselves.

struct MerkleCommitment {
    Hash256 root{};
    uint64_t num_leaves = 0;
    uint64_t leaf_size_bytes = 0;
    uint64_t total_bytes = 0;
};

struct LeafProof {
    uint64_t leaf_index = 0;
    Bytes leaf_bytes;
    struct PathEntry {
        Hash256 sibling{};
        uint8_t side = 0; // 0: sibling is the left child, 1: sibling is the right child
    };
    std::vector<PathEntry> path;

    Bytes serialize() const {
        ByteWriter w;
        w.u64(leaf_index);
        w.u64(leaf_bytes.size());
        w.raw(leaf_bytes);
        w.u16(static_cast<uint16_t>(path.size()));
        for (const auto& e : path) {
            w.raw(e.sibling);
            w.u8(e.side);
        }
        return w.take();
    }

    static LeafProof deserialize(std::span<const uint8_t> bytes) {
        ByteReader r(bytes);
        LeafProof p;
        p.leaf_index = r.u64();
        uint64_t n = r.u64();
        auto b = r.take(n);
        p.leaf_bytes.assign(b.begin(), b.end());
        uint16_t plen = r.u16();
        for (uint16_t i = 0; i < plen; ++i) {
            PathEntry e;
            auto h = r.take(32);
            std::copy(h.begin(), h.end(), e.sibling.begin());
            e.side = r.u8();
            p.path.push_back(e);
        }
        return p;
    }
};

inline Hash256 leaf_hash(uint64_t index, std::span<const uint8_t> bytes) {
    ByteWriter w;
    w.u8(0x00);
    w.u64(index);
    w.raw(bytes);
    return sha256(w.bytes());
}

inline Hash256 node_hash(const Hash256& left, const Hash256& right) {
    ByteWriter w;
    w.u8(0x01);
    w.raw(left);
    w.raw(right);
    return sha256(w.bytes());
}

// Builds the tree and retains the leaf bytes plus every level, so proofs can
// be produced later for any challenged index.
class MerkleTree {
public:
    MerkleTree(std::span<const uint8_t> data, uint64_t leaf_size_bytes) {
        if (leaf_size_bytes < 1) throw std::runtime_error("merkle: leafSizeBytes must be >= 1");
        leaf_size_ = leaf_size_bytes;
        total_bytes_ = data.size();
        uint64_t n = (data.size() + leaf_size_bytes - 1) / leaf_size_bytes;
        if (n == 0) n = 1; // empty input commits to a single empty leaf
        leaves_.resize(n);
        for (uint64_t i = 0; i < n; ++i) {
            uint64_t begin = i * leaf_size_bytes;
            uint64_t end = std::min<uint64_t>(begin + leaf_size_bytes, data.size());
            if (begin > data.size()) begin = data.size();
            leaves_[i].assign(data.begin() + begin, data.begin() + end);
        }
        build_levels();
    }

    MerkleCommitment commitment() const {
        return {levels_.back()[0], leaves_.size(), leaf_size_, total_bytes_};
    }

    uint64_t num_leaves() const { return leaves_.size(); }
    const Bytes& leaf(uint64_t i) const { return leaves_.at(i); }

    // Replaces one leaf's bytes and rebuilds; used by tamper scenarios.
    void corrupt_leaf(uint64_t i, Bytes bytes) {
        leaves_.at(i) = std::move(bytes);
        build_levels();
    }

    LeafProof prove(uint64_t index) const {
        if (index >= leaves_.size()) throw std::runtime_error("merkle: leaf index out of range");
        LeafProof proof;
        proof.leaf_index = index;
        proof.leaf_bytes = leaves_[index];
        uint64_t pos = index;
        for (size_t level = 0; level + 1 < levels_.size(); ++level) {
            uint64_t sib = pos ^ 1;
            // duplicate-last: a missing right sibling is the node itself
            if (sib >= levels_[level].size()) sib = pos;
            proof.path.push_back({levels_[level][sib], static_cast<uint8_t>(sib <= pos ? 0 : 1)});
            pos /= 2;
        }
        return proof;
    }

private:
    void build_levels() {
        levels_.clear();
        std::vector<Hash256> cur(leaves_.size());
        for (uint64_t i = 0; i < leaves_.size(); ++i) cur[i] = leaf_hash(i, leaves_[i]);
        levels_.push_back(cur);
        while (cur.size() > 1) {
            std::vector<Hash256> next((cur.size() + 1) / 2);
            for (size_t i = 0; i < next.size(); ++i) {
                const Hash256& l = cur[2 * i];
                const Hash256& r = (2 * i + 1 < cur.size()) ? cur[2 * i + 1] : cur[2 * i];
                next[i] = node_hash(l, r);
            }
            levels_.push_back(next);
            cur = std::move(next);
        }
    }

    std::vector<Bytes> leaves_;
    std::vector<std::vector<Hash256>> levels_;
    uint64_t leaf_size_ = 0;
    uint64_t total_bytes_ = 0;
};

// Folds the claimed leaf bytes up the path; true iff the result equals the
// committed root. Malformed proofs return false rather than throwing.
inline bool verify(const LeafProof& proof, const Hash256& root) {
    Hash256 h = leaf_hash(proof.leaf_index, proof.leaf_bytes);
    for (const auto& e : proof.path)
        h = (e.side == 0) ? node_hash(e.sibling, h) : node_hash(h, e.sibling);
    return h == root;
}

} // namespace pogo

#endif // POGO_MERKLE_HPP
