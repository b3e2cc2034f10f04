#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace drhc
{

using Rng = std::mt19937_64;

inline std::uint64_t
splitmix64( std::uint64_t x )
{
  x += 0x9e3779b97f4a7c15ULL;
  x = ( x ^ ( x >> 30 ) ) * 0xbf58476d1ce4e5b9ULL;
  x = ( x ^ ( x >> 27 ) ) * 0x94d049bb133111ebULL;
  return x ^ ( x >> 31 );
}

// Derives an independent stream seed from a master seed and a tuple of
// discriminators (agent id, tick, purpose tag, ...).
inline std::uint64_t
derive_seed( std::uint64_t master, std::initializer_list<std::uint64_t> parts )
{
  std::uint64_t h = splitmix64( master );
  for( std::uint64_t p : parts )
    h = splitmix64( h ^ splitmix64( p + 0x632be59bd9b4e019ULL ) );
  return h;
}

// Purpose tags for derive_seed.
namespace stream
{
inline constexpr std::uint64_t kSpawn   = 0x5350;
inline constexpr std::uint64_t kNetwork = 0x4e45;
inline constexpr std::uint64_t kGps     = 0x4750;
inline constexpr std::uint64_t kSolver  = 0x534f;
inline constexpr std::uint64_t kAsa     = 0x4153;
inline constexpr std::uint64_t kTrial   = 0x5452;
} // namespace stream

} // namespace drhc
