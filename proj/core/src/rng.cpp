#include "evcc/rng.hpp"

#include <limits>
#include <stdexcept>

namespace evcc {

Engine episode_engine(std::uint64_t root_seed, std::uint64_t index) {
  return Engine(splitmix64(splitmix64(root_seed) ^ (index * 0xd1342543de82ef95ULL + 1)));
}

long sample_vehicle_count(double lambda, double road_length, Engine& rng) {
  const double mean = lambda * road_length;
  if (!(mean >= 0)) throw std::invalid_argument("sample_vehicle_count: lambda * S must be >= 0");
  if (mean == 0) return 0;
  return std::poisson_distribution<long>(mean)(rng);
}

double sample_exponential(double rate, Engine& rng) {
  if (rate < 0) throw std::invalid_argument("sample_exponential: negative rate");
  if (rate == 0) return std::numeric_limits<double>::infinity();
  return std::exponential_distribution<double>(rate)(rng);
}

double sample_uniform(Engine& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace evcc
