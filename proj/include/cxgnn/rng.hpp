#pragma once

#include <cstdint>
#include <initializer_list>

namespace cxgnn {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// derive_seed(root, {graph, node}) = mix(mix(root, graph), node)
inline constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept {
    return splitmix64(root ^ splitmix64(stream));
}

inline constexpr std::uint64_t derive_seed(std::uint64_t root,
                                           std::initializer_list<std::uint64_t> path) noexcept {
    for (auto p : path) root = derive_seed(root, p);
    return root;
}

// Fixed sub-streams used by the trainer.
namespace stream {
inline constexpr std::uint64_t init = 0x1a17;
inline constexpr std::uint64_t epoch = 0xe90c;
inline constexpr std::uint64_t eval = 0xe7a1;
} // namespace stream

} // namespace cxgnn
