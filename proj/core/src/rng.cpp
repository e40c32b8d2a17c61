#include "qkdrelay/rng.hpp"

#include <sys/random.h>

#include <cerrno>
#include <cstring>

#include "qkdrelay/errors.hpp"

extern "C" {
#include <fips202.h>
#include <randombytes.h>
}

namespace qkdrelay {

struct RngContext::Impl {
    shake128incctx state{};

    explicit Impl(std::uint64_t seed) {
        shake128_inc_init(&state);
        static constexpr char kDomain[] = "qkdrelay.rng.v1";
        shake128_inc_absorb(&state,
                            reinterpret_cast<const std::uint8_t*>(kDomain),
                            sizeof(kDomain) - 1);
        std::uint8_t seed_bytes[8];
        for (int i = 0; i < 8; ++i) {
            seed_bytes[i] = static_cast<std::uint8_t>(seed >> (8 * i));
        }
        shake128_inc_absorb(&state, seed_bytes, sizeof(seed_bytes));
        shake128_inc_finalize(&state);
    }

    ~Impl() { shake128_inc_ctx_release(&state); }

    Impl(const Impl&) = delete;
    Impl& operator=(const Impl&) = delete;
};

RngContext::RngContext(std::uint64_t seed)
    : impl_(std::make_unique<Impl>(seed)), seed_(seed) {}

RngContext::~RngContext() = default;
RngContext::RngContext(RngContext&& other) noexcept = default;
RngContext& RngContext::operator=(RngContext&& other) noexcept = default;

void RngContext::fill(std::span<std::uint8_t> out) {
    shake128_inc_squeeze(out.data(), out.size(), &impl_->state);
}

Bytes RngContext::bytes(std::size_t count) {
    Bytes out(count);
    fill(out);
    return out;
}

std::uint64_t RngContext::next_u64() {
    std::uint8_t buf[8];
    fill(buf);
    std::uint64_t value = 0;
    for (int i = 7; i >= 0; --i) {
        value = (value << 8) | buf[i];
    }
    return value;
}

std::uint64_t RngContext::next_below(std::uint64_t bound) {
    if (bound == 0) {
        throw LengthError("next_below requires a positive bound");
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t value;
    do {
        value = next_u64();
    } while (value >= limit);
    return value % bound;
}

RngContext RngContext::fork() {
    return RngContext(next_u64());
}

namespace {
thread_local RngContext* t_rng_hook = nullptr;
}  // namespace

ScopedRngHook::ScopedRngHook(RngContext& rng) : previous_(t_rng_hook) {
    t_rng_hook = &rng;
}

ScopedRngHook::~ScopedRngHook() {
    t_rng_hook = previous_;
}

}  // namespace qkdrelay

extern "C" int PQCLEAN_randombytes(std::uint8_t* output, std::size_t n) {
    if (qkdrelay::t_rng_hook != nullptr) {
        qkdrelay::t_rng_hook->fill({output, n});
        return 0;
    }
    std::size_t done = 0;
    while (done < n) {
        ssize_t got = getrandom(output + done, n - done, 0);
        if (got < 0) {
            if (errno == EINTR) continue;
            return -1;
        }
        done += static_cast<std::size_t>(got);
    }
    return 0;
}
