#pragma once

#include <cstdint>
#include <random>

namespace evcc {

using Engine = std::mt19937_64;

/// splitmix64 finaliser; a bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for episode `index` under `root_seed`. Depends only on
/// the pair, so episodes can be simulated in any order or on any thread.
Engine episode_engine(std::uint64_t root_seed, std::uint64_t index);

/// Number of vehicles on the road for one episode: Poisson(lambda * S).
/// Drawn once per episode and held fixed while its tasks run.
long sample_vehicle_count(double lambda, double road_length, Engine& rng);

/// Exp(rate) sample; +inf when rate == 0.
double sample_exponential(double rate, Engine& rng);

/// U[0,1) sample.
double sample_uniform(Engine& rng);

}  // namespace evcc
