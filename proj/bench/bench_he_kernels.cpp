// Serial vs OpenMP kernels on a parameter-vector sized workload.
//   ./bench_he_kernels --benchmark_filter=encrypt

#include <benchmark/benchmark.h>

#include <map>

#include "relcheck/bigint.hpp"
#include "relcheck/he_kernels.hpp"
#include "relcheck/random.hpp"

using namespace relcheck;

namespace {

struct Workload {
  paillier::KeyPair keys;
  std::vector<mpz_class> plain;
  kernels::CipherVector ciphers;
  kernels::CipherVector other;
};

const Workload& workload(unsigned bits, std::size_t count) {
  static std::map<std::pair<unsigned, std::size_t>, Workload> cache;
  auto [it, fresh] = cache.try_emplace({bits, count});
  if (fresh) {
    Rng rng = derive_rng(bits, Stream::kKeygen);
    auto& w = it->second;
    w.keys = paillier::generate_keypair(bits, rng);
    for (std::size_t i = 0; i < count; ++i) w.plain.push_back(bigint::random_below(rng, w.keys.pub.n));
    w.ciphers = kernels::serial::encrypt(w.keys.pub, w.plain, 1);
    w.other = kernels::serial::encrypt(w.keys.pub, w.plain, 2);
  }
  return it->second;
}

template <bool Parallel>
void BM_encrypt(benchmark::State& state) {
  const auto& w = workload(static_cast<unsigned>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto c = Parallel ? kernels::parallel::encrypt(w.keys.pub, w.plain, 7) : kernels::serial::encrypt(w.keys.pub, w.plain, 7);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <bool Parallel>
void BM_decrypt(benchmark::State& state) {
  const auto& w = workload(static_cast<unsigned>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto m = Parallel ? kernels::parallel::decrypt(w.keys.priv, w.ciphers) : kernels::serial::decrypt(w.keys.priv, w.ciphers);
    benchmark::DoNotOptimize(m);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <bool Parallel>
void BM_add(benchmark::State& state) {
  const auto& w = workload(static_cast<unsigned>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto c = Parallel ? kernels::parallel::add(w.keys.pub, w.ciphers, w.other) : kernels::serial::add(w.keys.pub, w.ciphers, w.other);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <bool Parallel>
void BM_scale(benchmark::State& state) {
  const auto& w = workload(static_cast<unsigned>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const mpz_class l = (1u << 20) - 3;
  for (auto _ : state) {
    auto c = Parallel ? kernels::parallel::scale(w.keys.pub, w.ciphers, l) : kernels::serial::scale(w.keys.pub, w.ciphers, l);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <bool Parallel>
void BM_inner_product(benchmark::State& state) {
  const auto& w = workload(static_cast<unsigned>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  std::vector<mpz_class> k;
  for (std::size_t i = 0; i < w.plain.size(); ++i) k.push_back(mpz_class(1) << 33);
  for (auto _ : state) {
    auto c = Parallel ? kernels::parallel::inner_product(w.keys.pub, w.ciphers, k)
                      : kernels::serial::inner_product(w.keys.pub, w.ciphers, k);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long bits : {256, 1024}) b->Args({bits, 84});
  b->Args({256, 1024});
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_encrypt<false>)->Name("encrypt/serial")->Apply(sizes);
BENCHMARK(BM_encrypt<true>)->Name("encrypt/parallel")->Apply(sizes);
BENCHMARK(BM_decrypt<false>)->Name("decrypt/serial")->Apply(sizes);
BENCHMARK(BM_decrypt<true>)->Name("decrypt/parallel")->Apply(sizes);
BENCHMARK(BM_add<false>)->Name("add/serial")->Apply(sizes);
BENCHMARK(BM_add<true>)->Name("add/parallel")->Apply(sizes);
BENCHMARK(BM_scale<false>)->Name("scale/serial")->Apply(sizes);
BENCHMARK(BM_scale<true>)->Name("scale/parallel")->Apply(sizes);
BENCHMARK(BM_inner_product<false>)->Name("inner_product/serial")->Apply(sizes);
BENCHMARK(BM_inner_product<true>)->Name("inner_product/parallel")->Apply(sizes);

BENCHMARK_MAIN();
