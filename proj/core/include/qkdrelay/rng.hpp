#pragma once

#include <cstdint>
#include <memory>
#include <span>

#include "qkdrelay/bytes.hpp"

namespace qkdrelay {

/// Deterministic random byte stream (SHAKE128 over the seed).
///
/// Every source of randomness in the simulator draws from an RngContext so
/// that a run is reproducible from a single 64-bit seed.  Independent
/// sub-streams are obtained with fork(); the child stream is seeded from the
/// parent and never overlaps it.
class RngContext {
public:
    explicit RngContext(std::uint64_t seed);
    ~RngContext();

    RngContext(RngContext&& other) noexcept;
    RngContext& operator=(RngContext&& other) noexcept;
    RngContext(const RngContext&) = delete;
    RngContext& operator=(const RngContext&) = delete;

    void fill(std::span<std::uint8_t> out);
    Bytes bytes(std::size_t count);
    std::uint64_t next_u64();
    /// Uniform value in [0, bound) via rejection sampling; bound > 0.
    std::uint64_t next_below(std::uint64_t bound);

    RngContext fork();

    std::uint64_t seed() const { return seed_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint64_t seed_;
};

/// Routes the PQClean `randombytes` hook to `rng` on the current thread for
/// the lifetime of the guard.  Without an active guard the hook falls back to
/// the operating system entropy source.
class ScopedRngHook {
public:
    explicit ScopedRngHook(RngContext& rng);
    ~ScopedRngHook();

    ScopedRngHook(const ScopedRngHook&) = delete;
    ScopedRngHook& operator=(const ScopedRngHook&) = delete;

private:
    RngContext* previous_;
};

}  // namespace qkdrelay
