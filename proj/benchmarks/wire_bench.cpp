#include <benchmark/benchmark.h>

#include "coalesce/wire.hpp"

using namespace coalesce::wire;

namespace {

Envelope make_envelope(std::size_t n_subs, std::size_t payload_len) {
  Envelope env;
  env.step_index = 42;
  for (std::size_t i = 0; i < n_subs; ++i)
    env.sub_messages.push_back(
        {static_cast<std::uint32_t>(i), 0,
         std::vector<std::uint8_t>(payload_len, static_cast<std::uint8_t>(i))});
  return env;
}

void BM_Encode(benchmark::State& state) {
  const Envelope env = make_envelope(static_cast<std::size_t>(state.range(0)),
                                     static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto bytes = encode(env);
    benchmark::DoNotOptimize(bytes);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(encoded_size(env)));
}

void BM_Decode(benchmark::State& state) {
  const auto bytes = encode(make_envelope(static_cast<std::size_t>(state.range(0)),
                                          static_cast<std::size_t>(state.range(1))));
  for (auto _ : state) {
    auto env = decode(bytes);
    benchmark::DoNotOptimize(env);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(bytes.size()));
}

}  // namespace

BENCHMARK(BM_Encode)->Args({1, 64})->Args({4, 1536})->Args({16, 8192});
BENCHMARK(BM_Decode)->Args({1, 64})->Args({4, 1536})->Args({16, 8192});
