#include <algorithm>
#include <cstring>

#include "graph_assembler.hpp"

namespace hpn {

std::string_view to_string(GuardMode mode) { return mode == GuardMode::Structural ? "structural" : "valued"; }

// ---------------------------------------------------------------------------

MarkingStore::MarkingStore(std::size_t places) : places_(places), slots_(1024, 0) {}

void MarkingStore::encode(std::span<const std::uint32_t> counts, std::vector<std::uint8_t>& out) {
    out.clear();
    for (auto c : counts) {
        std::uint32_t v = c;
        while (v >= 0x80) {
            out.push_back(static_cast<std::uint8_t>(v | 0x80));
            v >>= 7;
        }
        out.push_back(static_cast<std::uint8_t>(v));
    }
}

std::uint64_t MarkingStore::hash_bytes(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
}

std::span<const std::uint8_t> MarkingStore::bytes_of(std::uint32_t id) const {
    return {arena_.data() + offsets_[id], static_cast<std::size_t>(offsets_[id + 1] - offsets_[id])};
}

std::optional<std::uint32_t> MarkingStore::find(std::span<const std::uint8_t> encoded, std::uint64_t hash) const {
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t i = hash & mask;; i = (i + 1) & mask) {
        auto slot = slots_[i];
        if (!slot)
            return std::nullopt;
        auto id = slot - 1;
        if (hashes_[id] == hash) {
            auto have = bytes_of(id);
            if (have.size() == encoded.size() && std::memcmp(have.data(), encoded.data(), have.size()) == 0)
                return id;
        }
    }
}

std::optional<std::uint32_t> MarkingStore::find(const Marking& m) const {
    if (m.size() != places_)
        return std::nullopt;
    std::vector<std::uint8_t> buf;
    encode(m.counts(), buf);
    return find(buf, hash_bytes(buf));
}

void MarkingStore::grow() {
    std::vector<std::uint32_t> slots(slots_.size() * 2, 0);
    const std::size_t mask = slots.size() - 1;
    for (std::uint32_t id = 0; id < hashes_.size(); ++id) {
        std::size_t i = hashes_[id] & mask;
        while (slots[i])
            i = (i + 1) & mask;
        slots[i] = id + 1;
    }
    slots_.swap(slots);
}

std::pair<std::uint32_t, bool> MarkingStore::insert(std::span<const std::uint8_t> encoded, std::uint64_t hash) {
    if (auto id = find(encoded, hash))
        return {*id, false};
    if ((hashes_.size() + 1) * 2 > slots_.size())
        grow();
    auto id = static_cast<std::uint32_t>(hashes_.size());
    arena_.insert(arena_.end(), encoded.begin(), encoded.end());
    offsets_.push_back(arena_.size());
    hashes_.push_back(hash);
    const std::size_t mask = slots_.size() - 1;
    std::size_t i = hash & mask;
    while (slots_[i])
        i = (i + 1) & mask;
    slots_[i] = id + 1;
    return {id, true};
}

void MarkingStore::decode_into(std::uint32_t id, std::vector<std::uint32_t>& out) const {
    out.resize(places_);
    auto bytes = bytes_of(id);
    std::size_t pos = 0;
    for (std::size_t p = 0; p < places_; ++p) {
        std::uint32_t v = 0;
        int shift = 0;
        while (true) {
            auto b = bytes[pos++];
            v |= static_cast<std::uint32_t>(b & 0x7f) << shift;
            if (!(b & 0x80))
                break;
            shift += 7;
        }
        out[p] = v;
    }
}

Marking MarkingStore::at(std::uint32_t id) const {
    std::vector<std::uint32_t> counts;
    decode_into(id, counts);
    return Marking(std::move(counts));
}

std::size_t MarkingStore::memory_bytes() const {
    return arena_.capacity() + offsets_.capacity() * sizeof(std::uint64_t) +
           hashes_.capacity() * sizeof(std::uint64_t) + slots_.capacity() * sizeof(std::uint32_t);
}

// ---------------------------------------------------------------------------

std::span<const Edge> ReachabilityGraph::out_edges(std::uint32_t id) const {
    return {edges_.data() + edge_offsets_[id], static_cast<std::size_t>(edge_offsets_[id + 1] - edge_offsets_[id])};
}

std::size_t ReachabilityGraph::memory_bytes() const {
    return store_.memory_bytes() + edges_.capacity() * sizeof(Edge) + edge_offsets_.capacity() * sizeof(std::uint64_t);
}

ReachabilityGraph GraphAssembler::finish() {
    auto& offsets = g_.edge_offsets_;
    offsets.assign(g_.store_.size() + 1, 0);
    for (const auto& e : g_.edges_)
        ++offsets[e.from + 1];
    for (std::size_t i = 1; i < offsets.size(); ++i)
        offsets[i] += offsets[i - 1];
    // Builders emit edges grouped by source in ascending order already.
    auto by_source = [](const Edge& a, const Edge& b) { return a.from < b.from; };
    if (!std::is_sorted(g_.edges_.begin(), g_.edges_.end(), by_source))
        std::stable_sort(g_.edges_.begin(), g_.edges_.end(), by_source);
    return std::move(g_);
}

} // namespace hpn
