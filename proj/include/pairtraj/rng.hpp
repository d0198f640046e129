// rng.hpp — counter-based random streams keyed by (seed, stream id)

#pragma once

#include <cstdint>

namespace pairtraj {

// SplitMix64 finalizer (Stafford mix 13).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic random stream: a Weyl sequence with a stream-specific odd
// increment pushed through mix64. A stream is fully determined by
// (seed, stream_id), so trajectory i always sees the same numbers no matter
// which worker thread runs it.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : state_(mix64(seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1))),
          gamma_(mix64(stream_id ^ (seed * 0xda3e39cb94b95bdbULL)) | 1ULL) {}

    std::uint64_t next_u64() {
        state_ += gamma_;
        return mix64(state_);
    }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
    std::uint64_t gamma_;
};

}  // namespace pairtraj
