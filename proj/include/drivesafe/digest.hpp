#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <fmt/core.h>

namespace drivesafe {

/// 64-bit FNV-1a. Used for payload digests and model snapshot ids, not for
/// anything security relevant.
[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

[[nodiscard]] inline std::string fnv1a64_hex(std::string_view bytes) {
    return fmt::format("{:016x}", fnv1a64(bytes));
}

}  // namespace drivesafe
