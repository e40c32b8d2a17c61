// Microbenchmarks for the primitives the protocol costs are built from:
// pad XOR, link encryption, authentication, the KEM, the signature schemes
// and onion construction, plus whole protocol runs per model.

#include "benchmark/benchmark.h"

#include <vector>

#include "qkdrelay/crypto.hpp"
#include "qkdrelay/onion.hpp"
#include "qkdrelay/protocols.hpp"

using namespace qkdrelay;

namespace {

RngContext bench_rng() { return RngContext(0xbe7c4); }

std::vector<NodeId> make_hops(RngContext& rng, std::size_t n) {
    std::vector<NodeId> hops;
    for (std::size_t i = 0; i < n; ++i) {
        hops.push_back(NodeId::random(rng));
    }
    return hops;
}

CircuitKeys make_keys(RngContext& rng, std::size_t n) {
    CircuitKeys keys;
    for (std::size_t i = 0; i < n; ++i) {
        keys.push_back({SymKey::random(rng), SymKey::random(rng)});
    }
    return keys;
}

}  // namespace

static void BM_OtpXor(benchmark::State& state) {
    RngContext rng = bench_rng();
    Bytes a = rng.bytes(static_cast<std::size_t>(state.range(0)));
    Bytes b = rng.bytes(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(otp_xor(a, b));
    }
    state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OtpXor)->Range(32, 4096);

static void BM_SymEncrypt(benchmark::State& state) {
    RngContext rng = bench_rng();
    SymKey key = SymKey::random(rng);
    Bytes plaintext = rng.bytes(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sym_encrypt(key, plaintext, rng));
    }
    state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SymEncrypt)->Range(32, 4096);

static void BM_SymDecrypt(benchmark::State& state) {
    RngContext rng = bench_rng();
    SymKey key = SymKey::random(rng);
    Bytes ciphertext = sym_encrypt(
        key, rng.bytes(static_cast<std::size_t>(state.range(0))), rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sym_decrypt(key, ciphertext));
    }
    state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SymDecrypt)->Range(32, 4096);

static void BM_MacTag(benchmark::State& state) {
    RngContext rng = bench_rng();
    SymKey key = SymKey::random(rng);
    Bytes message = rng.bytes(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mac_tag(key, message));
    }
    state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MacTag)->Range(32, 4096);

static void BM_KemEncapsulate(benchmark::State& state) {
    RngContext rng = bench_rng();
    KemKeyPair pair = kem_keygen(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kem_encapsulate(pair.public_key, rng));
    }
}
BENCHMARK(BM_KemEncapsulate);

static void BM_KemDecapsulate(benchmark::State& state) {
    RngContext rng = bench_rng();
    KemKeyPair pair = kem_keygen(rng);
    KemEncapsulation enc = kem_encapsulate(pair.public_key, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            kem_decapsulate(pair.secret_key, enc.ciphertext));
    }
}
BENCHMARK(BM_KemDecapsulate);

static void BM_FalconSign(benchmark::State& state) {
    RngContext rng = bench_rng();
    SigKeyPair pair = sig_keygen(SigScheme::falcon1024, rng);
    Bytes message = rng.bytes(64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sig_sign(pair, message));
    }
}
BENCHMARK(BM_FalconSign);

static void BM_FalconVerify(benchmark::State& state) {
    RngContext rng = bench_rng();
    SigKeyPair pair = sig_keygen(SigScheme::falcon1024, rng);
    Bytes message = rng.bytes(64);
    SigMaterial material = sig_sign(pair, message);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sig_verify(material, message));
    }
}
BENCHMARK(BM_FalconVerify);

static void BM_DilithiumSign(benchmark::State& state) {
    RngContext rng = bench_rng();
    SigKeyPair pair = sig_keygen(SigScheme::dilithium3, rng);
    Bytes message = rng.bytes(64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sig_sign(pair, message));
    }
}
BENCHMARK(BM_DilithiumSign);

static void BM_DilithiumVerify(benchmark::State& state) {
    RngContext rng = bench_rng();
    SigKeyPair pair = sig_keygen(SigScheme::dilithium3, rng);
    Bytes message = rng.bytes(64);
    SigMaterial material = sig_sign(pair, message);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sig_verify(material, message));
    }
}
BENCHMARK(BM_DilithiumVerify);

static void BM_BuildOnion(benchmark::State& state) {
    RngContext rng = bench_rng();
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<NodeId> hops = make_hops(rng, n);
    CircuitKeys keys = make_keys(rng, n);
    Secret secret = Secret::random(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_onion(secret, hops, keys, rng));
    }
}
BENCHMARK(BM_BuildOnion)->Range(1, 16);

static void BM_BuildOnionExtHmac(benchmark::State& state) {
    RngContext rng = bench_rng();
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<NodeId> hops = make_hops(rng, n);
    CircuitKeys keys = make_keys(rng, n);
    Secret secret = Secret::random(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_onion_ext(
            secret, hops, keys, OnionVariant::ext_hmac256, nullptr, rng));
    }
}
BENCHMARK(BM_BuildOnionExtHmac)->Range(1, 16);

static void BM_PeelLayer(benchmark::State& state) {
    RngContext rng = bench_rng();
    std::vector<NodeId> hops = make_hops(rng, 8);
    CircuitKeys keys = make_keys(rng, 8);
    Secret secret = Secret::random(rng);
    OnionFrame frame = build_onion(secret, hops, keys, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(peel_layer(frame, keys[0].enc_key));
    }
}
BENCHMARK(BM_PeelLayer);

static void BM_RunProtocol(benchmark::State& state) {
    RunConfig cfg;
    cfg.model = static_cast<Model>(state.range(0));
    cfg.n_nodes = static_cast<std::size_t>(state.range(1));
    cfg.seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_protocol(cfg));
    }
}
BENCHMARK(BM_RunProtocol)
    ->ArgNames({"model", "nodes"})
    ->Args({static_cast<int>(Model::kr), 5})
    ->Args({static_cast<int>(Model::tn), 5})
    ->Args({static_cast<int>(Model::orr), 5})
    ->Args({static_cast<int>(Model::orr_ext), 5})
    ->Args({static_cast<int>(Model::orr), 11})
    ->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
