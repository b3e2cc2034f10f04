#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "drhc/core.hpp"

namespace drhc
{

struct WorldConfig
{
  double area_width         = 600.0;
  double area_height        = 400.0;
  double tile_size          = 25.0;
  double z_min              = 35.0;
  double z_max              = 100.0;
  double search_radius      = 5.0;
  double search_altitude    = 40.0;
  double altitude_tolerance = 2.0;
  double collision_radius   = 1.0;
  double comm_range         = 200.0;
  double max_speed          = 40.0;
  double max_acc_horizontal = 3.0;
  double max_acc_vertical   = 6.0;
  double sim_dt             = 0.05;
  double t_update           = 0.05;
  double t_broadcast        = 0.25;
  double t_auction          = 0.5;
  double t_max              = 300.0;
  double gps_noise_radius   = 2.0;

  int columns() const { return static_cast<int>( std::lround( area_width / tile_size ) ); }
  int rows() const { return static_cast<int>( std::lround( area_height / tile_size ) ); }
  std::size_t tile_count() const { return static_cast<std::size_t>( rows() ) * static_cast<std::size_t>( columns() ); }
  double diagonal() const { return std::hypot( area_width, area_height ); }

  void validate() const;
};

namespace detail
{
inline bool
is_positive_multiple( double value, double unit )
{
  if( !( value > 0.0 ) || !( unit > 0.0 ) )
    return false;
  const double ratio = value / unit;
  return std::abs( ratio - std::round( ratio ) ) < 1e-9 * std::max( 1.0, ratio ) && std::round( ratio ) >= 1.0;
}
} // namespace detail

inline void
WorldConfig::validate() const
{
  if( !( tile_size > 0.0 ) )
    throw ConfigError( "world.tile_size", "must be positive" );
  if( !detail::is_positive_multiple( area_width, tile_size ) )
    throw ConfigError( "world.area_width", "must be a positive integer multiple of tile_size" );
  if( !detail::is_positive_multiple( area_height, tile_size ) )
    throw ConfigError( "world.area_height", "must be a positive integer multiple of tile_size" );
  if( !( search_radius > 0.0 && search_radius < tile_size / 2.0 ) )
    throw ConfigError( "world.search_radius", "must lie in (0, tile_size/2)" );
  if( !( z_min < search_altitude && search_altitude < z_max ) )
    throw ConfigError( "world.search_altitude", "must lie strictly between z_min and z_max" );
  if( !( z_min > 0.0 ) )
    throw ConfigError( "world.z_min", "must be positive" );
  if( altitude_tolerance < 0.0 )
    throw ConfigError( "world.altitude_tolerance", "must be non-negative" );
  if( !( collision_radius > 0.0 ) )
    throw ConfigError( "world.collision_radius", "must be positive" );
  if( !( comm_range > 0.0 ) )
    throw ConfigError( "world.comm_range", "must be positive" );
  if( !( max_speed > 0.0 ) )
    throw ConfigError( "world.max_speed", "must be positive" );
  if( !( max_acc_horizontal > 0.0 ) )
    throw ConfigError( "world.max_acc_horizontal", "must be positive" );
  if( !( max_acc_vertical > 0.0 ) )
    throw ConfigError( "world.max_acc_vertical", "must be positive" );
  if( !( sim_dt > 0.0 ) )
    throw ConfigError( "world.sim_dt", "must be positive" );
  if( !( sim_dt <= t_update ) )
    throw ConfigError( "world.t_update", "must be >= sim_dt" );
  if( !( t_update <= t_broadcast ) )
    throw ConfigError( "world.t_broadcast", "must be >= t_update" );
  if( !( t_broadcast <= t_auction ) )
    throw ConfigError( "world.t_auction", "must be >= t_broadcast" );
  if( t_max < 0.0 )
    throw ConfigError( "world.t_max", "must be non-negative" );
  if( gps_noise_radius < 0.0 )
    throw ConfigError( "world.gps_noise_radius", "must be non-negative" );
}

struct AgentState
{
  AgentId id = 0;
  Vec3    position     = Vec3::Zero();
  Vec3    velocity     = Vec3::Zero();
  Vec3    acceleration = Vec3::Zero();
  double  max_speed_actual = 40.0;
  Vec3    max_acc_actual   = Vec3( 3.0, 3.0, 6.0 );
  bool    alive            = true;
};

enum class TileState
{
  Unsearched,
  Searched
};

struct Tile
{
  TileIndex              index;
  Vec3                   center     = Vec3::Zero();
  TileState              true_state = TileState::Unsearched;
  std::optional<AgentId> searched_by;
  std::optional<double>  searched_at;
};

// now is always recomputed from the integer tick so it never drifts.
struct SimClock
{
  double        dt   = 0.05;
  std::uint64_t tick = 0;

  double now() const { return static_cast<double>( tick ) * dt; }
  void   advance() { ++tick; }
};

// Row-major grid: index = row * columns + col, rows along y, columns along x.
inline std::vector<Tile>
build_grid( const WorldConfig& cfg )
{
  if( !detail::is_positive_multiple( cfg.area_width, cfg.tile_size ) )
    throw ConfigError( "world.area_width", "must be a positive integer multiple of tile_size" );
  if( !detail::is_positive_multiple( cfg.area_height, cfg.tile_size ) )
    throw ConfigError( "world.area_height", "must be a positive integer multiple of tile_size" );

  const int rows = cfg.rows();
  const int cols = cfg.columns();
  std::vector<Tile> tiles;
  tiles.reserve( static_cast<std::size_t>( rows * cols ) );
  for( int r = 0; r < rows; ++r )
  {
    for( int c = 0; c < cols; ++c )
    {
      Tile t;
      t.index  = { r, c };
      t.center = Vec3( ( c + 0.5 ) * cfg.tile_size, ( r + 0.5 ) * cfg.tile_size, cfg.search_altitude );
      tiles.push_back( t );
    }
  }
  return tiles;
}

// Point-mass step toward `desired_position`. The commanded acceleration is the
// constant acceleration that would land exactly on the target after `horizon`
// seconds of semi-implicit Euler steps of size dt; it is then clamped per axis,
// and the integrated velocity is clamped to the agent's speed limit.
inline AgentState
step_kinematics( const AgentState& state, const Vec3& desired_position, double dt, double horizon = 0.0 )
{
  if( !( dt > 0.0 ) )
    throw std::invalid_argument( "step_kinematics: dt must be positive" );
  const double h = horizon > 0.0 ? horizon : dt;

  AgentState next = state;
  const Vec3 offset = desired_position - state.position - state.velocity * h;
  Vec3 acc = offset * ( 2.0 / ( h * ( h + dt ) ) );
  for( int k = 0; k < 3; ++k )
    acc[k] = std::clamp( acc[k], -state.max_acc_actual[k], state.max_acc_actual[k] );

  Vec3 vel = state.velocity + acc * dt;
  const double speed = vel.norm();
  if( speed > state.max_speed_actual )
    vel *= state.max_speed_actual / speed;

  next.acceleration = acc;
  next.velocity     = vel;
  next.position     = state.position + vel * dt;
  return next;
}

using CollisionPair = std::pair<AgentId, AgentId>;

// All unordered pairs (lower id first) strictly closer than collision_radius.
inline std::vector<CollisionPair>
detect_collisions( std::span<const AgentState> states, double collision_radius )
{
  std::vector<CollisionPair> pairs;
  const double r2 = collision_radius * collision_radius;
  for( std::size_t i = 0; i < states.size(); ++i )
  {
    if( !states[i].alive )
      continue;
    for( std::size_t j = i + 1; j < states.size(); ++j )
    {
      if( !states[j].alive )
        continue;
      if( ( states[i].position - states[j].position ).squaredNorm() < r2 )
      {
        auto a = states[i].id, b = states[j].id;
        pairs.emplace_back( std::min( a, b ), std::max( a, b ) );
      }
    }
  }
  return pairs;
}

// Counts each colliding pair once per trial, at first contact.
class CollisionTracker
{
public:
  // Returns the pairs that are in contact for the first time.
  std::vector<CollisionPair> observe( std::span<const AgentState> states, double collision_radius )
  {
    std::vector<CollisionPair> fresh;
    for( const auto& p : detect_collisions( states, collision_radius ) )
      if( seen_.insert( p ).second )
        fresh.push_back( p );
    return fresh;
  }

  std::size_t count() const { return seen_.size(); }

private:
  std::set<CollisionPair> seen_;
};

inline bool
check_tile_searched( const AgentState& state, const Tile& tile, const WorldConfig& cfg )
{
  return horizontal_distance( state.position, tile.center ) <= cfg.search_radius
      && std::abs( state.position.z() - cfg.search_altitude ) <= cfg.altitude_tolerance;
}

// The only tile whose center can lie within search_radius (< tile_size/2)
// horizontally is the one containing the agent.
inline std::optional<std::size_t>
tile_under( const Vec3& position, const WorldConfig& cfg )
{
  const int col = static_cast<int>( std::floor( position.x() / cfg.tile_size ) );
  const int row = static_cast<int>( std::floor( position.y() / cfg.tile_size ) );
  if( col < 0 || row < 0 || col >= cfg.columns() || row >= cfg.rows() )
    return std::nullopt;
  return static_cast<std::size_t>( row * cfg.columns() + col );
}

} // namespace drhc
