#include <catch2/catch_amalgamated.hpp>

#include "pogo/merkle.hpp"

using namespace pogo;

static Bytes seq_bytes(size_t n, uint8_t start = 0) {
    Bytes b(n);
    for (size_t i = 0; i < n; ++i) b[i] = static_cast<uint8_t>(start + i);
    return b;
}

// Independent oracle: recompute a root by folding full levels with the
// duplicate-last rule, written separately from the tree implementation.
static Hash256 oracle_root(const std::vector<Bytes>& leaves) {
    std::vector<Hash256> level;
    for (size_t i = 0; i < leaves.size(); ++i) {
        ByteWriter w;
        w.u8(0x00);
        w.u64(i);
        w.raw(leaves[i]);
        level.push_back(sha256(w.bytes()));
    }
    while (level.size() > 1) {
        std::vector<Hash256> next;
        for (size_t i = 0; i < level.size(); i += 2) {
            const Hash256& l = level[i];
            const Hash256& r = (i + 1 < level.size()) ? level[i + 1] : level[i];
            ByteWriter w;
            w.u8(0x01);
            w.raw(l);
            w.raw(r);
            next.push_back(sha256(w.bytes()));
        }
        level = std::move(next);
    }
    return level[0];
}

TEST_CASE("single leaf root is the leaf hash") {
    Bytes data = seq_bytes(4);
    MerkleTree tree(data, 8); // data smaller than one leaf
    REQUIRE(tree.num_leaves() == 1);
    REQUIRE(tree.commitment().root == leaf_hash(0, data));
}

TEST_CASE("two leaf root folds by hand") {
    Bytes data = seq_bytes(8);
    MerkleTree tree(data, 4);
    REQUIRE(tree.num_leaves() == 2);
    Hash256 l0 = leaf_hash(0, Bytes(data.begin(), data.begin() + 4));
    Hash256 l1 = leaf_hash(1, Bytes(data.begin() + 4, data.end()));
    REQUIRE(tree.commitment().root == node_hash(l0, l1));
}

TEST_CASE("odd leaf count duplicates the last node") {
    Bytes data = seq_bytes(12);
    MerkleTree tree(data, 4); // 3 leaves
    Hash256 l0 = leaf_hash(0, Bytes(data.begin(), data.begin() + 4));
    Hash256 l1 = leaf_hash(1, Bytes(data.begin() + 4, data.begin() + 8));
    Hash256 l2 = leaf_hash(2, Bytes(data.begin() + 8, data.end()));
    Hash256 expect = node_hash(node_hash(l0, l1), node_hash(l2, l2));
    REQUIRE(tree.commitment().root == expect);
}

TEST_CASE("roots match the independent fold oracle") {
    for (size_t n_leaves : {1, 2, 3, 4, 5, 6, 7, 8, 9, 13}) {
        Bytes data = seq_bytes(n_leaves * 4, 17);
        MerkleTree tree(data, 4);
        std::vector<Bytes> leaves;
        for (size_t i = 0; i < n_leaves; ++i)
            leaves.push_back(Bytes(data.begin() + i * 4, data.begin() + (i + 1) * 4));
        REQUIRE(tree.commitment().root == oracle_root(leaves));
    }
}

TEST_CASE("ragged final leaf carries the remainder bytes") {
    Bytes data = seq_bytes(10);
    MerkleTree tree(data, 4); // leaves of 4, 4, 2 bytes
    REQUIRE(tree.num_leaves() == 3);
    REQUIRE(tree.leaf(2) == Bytes(data.begin() + 8, data.end()));
    REQUIRE(tree.commitment().total_bytes == 10);
}

TEST_CASE("every proof verifies against the root") {
    Bytes data = seq_bytes(13 * 4, 5);
    MerkleTree tree(data, 4);
    Hash256 root = tree.commitment().root;
    for (uint64_t i = 0; i < tree.num_leaves(); ++i) {
        LeafProof p = tree.prove(i);
        REQUIRE(p.leaf_index == i);
        REQUIRE(verify(p, root));
    }
    REQUIRE_THROWS(tree.prove(tree.num_leaves()));
}

TEST_CASE("a proof does not transplant to another index") {
    Bytes data = seq_bytes(8 * 4);
    MerkleTree tree(data, 4);
    Hash256 root = tree.commitment().root;
    LeafProof p = tree.prove(3);
    p.leaf_index = 5;
    REQUIRE_FALSE(verify(p, root));
}

TEST_CASE("corrupting a leaf changes the root and old proofs die") {
    Bytes data = seq_bytes(8 * 4);
    MerkleTree tree(data, 4);
    Hash256 old_root = tree.commitment().root;
    LeafProof old_proof = tree.prove(2);
    tree.corrupt_leaf(2, Bytes{9, 9, 9, 9});
    Hash256 new_root = tree.commitment().root;
    REQUIRE(new_root != old_root);
    REQUIRE_FALSE(verify(old_proof, new_root));
    REQUIRE(verify(tree.prove(2), new_root));
    // untouched leaves still prove against the new root
    REQUIRE(verify(tree.prove(0), new_root));
}

TEST_CASE("proof serialization round trips") {
    Bytes data = seq_bytes(6 * 4);
    MerkleTree tree(data, 4);
    LeafProof p = tree.prove(4);
    LeafProof q = LeafProof::deserialize(p.serialize());
    REQUIRE(q.leaf_index == p.leaf_index);
    REQUIRE(q.leaf_bytes == p.leaf_bytes);
    REQUIRE(q.path.size() == p.path.size());
    for (size_t i = 0; i < p.path.size(); ++i) {
        REQUIRE(q.path[i].sibling == p.path[i].sibling);
        REQUIRE(q.path[i].side == p.path[i].side);
    }
    REQUIRE(verify(q, tree.commitment().root));
}

TEST_CASE("empty input commits to one empty leaf") {
    MerkleTree tree(Bytes{}, 4);
    REQUIRE(tree.num_leaves() == 1);
    REQUIRE(tree.commitment().root == leaf_hash(0, Bytes{}));
    REQUIRE(verify(tree.prove(0), tree.commitment().root));
}
