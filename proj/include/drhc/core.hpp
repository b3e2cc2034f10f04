#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace drhc
{

using Vec3    = Eigen::Vector3d;
using AgentId = std::uint32_t;

inline constexpr AgentId kNoAgent = std::numeric_limits<AgentId>::max();

struct TileIndex
{
  int row = 0;
  int col = 0;

  friend auto operator<=>( const TileIndex&, const TileIndex& ) = default;
};

struct Bid
{
  TileIndex tile;
  double    value     = -std::numeric_limits<double>::infinity();
  AgentId   bidder    = kNoAgent;
  double    placed_at = 0.0;
};

// Total order on bids: value first, then the higher bidder id wins exact ties.
inline bool
outbids( double value_a, AgentId bidder_a, double value_b, AgentId bidder_b )
{
  if( value_a != value_b )
    return value_a > value_b;
  if( bidder_b == kNoAgent )
    return bidder_a != kNoAgent;
  if( bidder_a == kNoAgent )
    return false;
  return bidder_a > bidder_b;
}

// Raised for invalid configuration. `key()` is the dotted path of the
// offending field, e.g. "world.tile_size".
class ConfigError : public std::runtime_error
{
public:
  ConfigError( std::string key, const std::string& what )
    : std::runtime_error( key + ": " + what )
    , key_( std::move( key ) )
  {}

  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

inline double
horizontal_distance( const Vec3& a, const Vec3& b )
{
  return std::hypot( a.x() - b.x(), a.y() - b.y() );
}

} // namespace drhc
