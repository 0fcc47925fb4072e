/* Copyright 2026 The peakmem Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace peakmem {

/// Dense index of a node inside a Graph (ascending-id order).
using NodeIndex = std::uint32_t;

/// Fixed-width dynamic bitset over node indices.
class NodeSet {
  public:
    NodeSet() = default;
    explicit NodeSet(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    std::size_t universe() const { return size_; }

    bool contains(NodeIndex i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void insert(NodeIndex i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void erase(NodeIndex i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
    bool empty() const {
        for (auto w : words_)
            if (w != 0) return false;
        return true;
    }

    /// True when every element of this set is also in `other`.
    bool is_subset_of(const NodeSet& other) const {
        for (std::size_t k = 0; k < words_.size(); ++k)
            if (words_[k] & ~other.words_[k]) return false;
        return true;
    }

    NodeSet& operator|=(const NodeSet& o) {
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= o.words_[k];
        return *this;
    }
    NodeSet& operator&=(const NodeSet& o) {
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k];
        return *this;
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t k = 0; k < words_.size(); ++k) {
            std::uint64_t w = words_[k];
            while (w != 0) {
                const int bit = std::countr_zero(w);
                fn(static_cast<NodeIndex>(k * 64 + static_cast<std::size_t>(bit)));
                w &= w - 1;
            }
        }
    }

    std::vector<NodeIndex> to_vector() const {
        std::vector<NodeIndex> out;
        for_each([&](NodeIndex i) { out.push_back(i); });
        return out;
    }

    const std::vector<std::uint64_t>& words() const { return words_; }

    friend bool operator==(const NodeSet&, const NodeSet&) = default;

  private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

struct NodeSetHash {
    std::size_t operator()(const NodeSet& s) const {
        std::size_t h = 0x9e3779b97f4a7c15ull;
        for (auto w : s.words()) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return h;
    }
};

}  // namespace peakmem
