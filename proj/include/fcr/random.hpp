#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace fcr {

/// Random engine used by every stochastic component: 64-bit Mersenne Twister
/// (MT19937-64). Variates are drawn through Boost.Random distributions, whose
/// algorithms are fixed in the headers, so streams are reproducible per seed.
using Engine = boost::random::mt19937_64;

/// SplitMix64 mix of (base, key). Used to derive per-replica / per-repetition
/// seeds so that independent streams are keyed deterministically.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t key) noexcept;

}  // namespace fcr
