#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "drhc/core.hpp"

namespace drhc
{

// The adaptable D-RHC parameters (w_eta, w_z, w_g, delta_min, c_penalty)
// plus fixed cost constants.
struct CostProfile
{
  double w_eta     = 0.3;
  double w_z       = 0.2;
  double w_g       = 0.8;
  double delta_min = 10.0;
  double c_penalty = 0.75;
  double alpha     = 0.5;
  double c_dist    = 50.0;
  double z_min     = 35.0;
  double z_max     = 100.0;

  void validate() const
  {
    auto unit = [&]( double v, const char* key ) {
      if( !( v >= 0.0 && v <= 1.0 ) )
        throw ConfigError( std::string( "profile." ) + key, "must lie in [0, 1]" );
    };
    unit( w_eta, "w_eta" );
    unit( w_z, "w_z" );
    unit( w_g, "w_g" );
    unit( c_penalty, "c_penalty" );
    unit( alpha, "alpha" );
    if( !( delta_min >= 0.0 && delta_min <= 100.0 ) )
      throw ConfigError( "profile.delta_min", "must lie in [0, 100]" );
    if( !( c_dist > 0.0 ) )
      throw ConfigError( "profile.c_dist", "must be positive" );
    if( !( z_min > 0.0 ) )
      throw ConfigError( "profile.z_min", "must be positive" );
    if( !( z_max > z_min ) )
      throw ConfigError( "profile.z_max", "must exceed z_min" );
  }

  friend bool operator==( const CostProfile&, const CostProfile& ) = default;
};

// Piecewise distance term: linear in d below 0.75 r_c, flat penalty beyond.
inline double
cohesion_term( double d, double comm_range, double c_penalty )
{
  return d < 0.75 * comm_range ? ( 2.0 * d / comm_range ) - 1.0 : c_penalty;
}

// Faded, sorted-distance cohesion cost. Range is [-1, 1]: coincident
// neighbours with alpha = 1 give -1.
inline double
cohesion_cost( const Vec3& candidate, std::span<const Vec3> predicted_neighbors, double comm_range,
               const CostProfile& profile )
{
  const std::size_t n = predicted_neighbors.size();
  if( n == 0 )
    return 0.0;

  constexpr std::size_t kInline = 32;
  std::array<double, kInline> small;
  std::vector<double>         large;
  double* dist = small.data();
  if( n > kInline )
  {
    large.resize( n );
    dist = large.data();
  }
  for( std::size_t j = 0; j < n; ++j )
    dist[j] = ( predicted_neighbors[j] - candidate ).norm();
  std::sort( dist, dist + n );

  double weight = 1.0;
  double sum    = 0.0;
  for( std::size_t j = 0; j < n; ++j )
  {
    weight *= profile.alpha; // alpha^j, j from 1
    sum += weight * cohesion_term( dist[j], comm_range, profile.c_penalty );
  }
  return std::min( 1.0, sum / static_cast<double>( n ) );
}

inline double
safety_cost( double z, const CostProfile& profile )
{
  double c;
  if( profile.z_min > z )
  {
    const double r = z / profile.z_min - 1.0;
    c = r * r;
  }
  else
  {
    const double r = ( z - profile.z_min ) / profile.z_max;
    c = r * r;
  }
  return std::min( 1.0, c );
}

inline double
goal_cost( const Vec3& candidate, const Vec3& goal_center, const CostProfile& profile )
{
  const double d = ( candidate - goal_center ).norm();
  return std::min( 1.0, ( 2.0 / std::numbers::pi ) * std::atan( d / profile.c_dist ) );
}

struct SearchBox
{
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Zero();

  bool contains( const Vec3& p ) const
  {
    return ( p.array() >= lower.array() ).all() && ( p.array() <= upper.array() ).all();
  }

  Vec3 clamp( const Vec3& p ) const { return p.cwiseMax( lower ).cwiseMin( upper ); }
  Vec3 center() const { return 0.5 * ( lower + upper ); }
  double diagonal() const { return ( upper - lower ).norm(); }
};

// Per-axis reachable box at the horizon: p + v h +/- a_max h^2 / 2.
inline SearchBox
reachability_box( const Vec3& position, const Vec3& velocity, const Vec3& max_acc, double horizon )
{
  const Vec3 ballistic = position + velocity * horizon;
  const Vec3 reach     = 0.5 * max_acc * horizon * horizon;
  return SearchBox{ ballistic - reach, ballistic + reach };
}

// A neighbour's dead-reckoned motion relative to the decision time.
struct NeighborTrack
{
  Vec3 position     = Vec3::Zero();
  Vec3 velocity     = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();

  Vec3 at( double tau ) const { return position + velocity * tau + 0.5 * acceleration * tau * tau; }
};

// Everything one D-RHC solve needs about the agent and its neighbourhood.
// predicted_neighbors are the tracks evaluated at the horizon. With
// separation_samples > 1 and tracks given, separation is also checked at
// evenly spaced times before the horizon along the path to the candidate.
struct DecisionContext
{
  Vec3              position = Vec3::Zero();
  Vec3              velocity = Vec3::Zero();
  Vec3              max_acc  = Vec3( 3.0, 3.0, 6.0 );
  double            horizon  = 0.05;
  double            comm_range = 200.0;
  std::vector<Vec3> predicted_neighbors;
  std::vector<NeighborTrack> tracks;
  int               separation_samples = 1;
  std::optional<Vec3> goal;
  CostProfile       profile;

  SearchBox box() const { return reachability_box( position, velocity, max_acc, horizon ); }
};

struct CostTerms
{
  double cohesion = 0.0;
  double safety   = 0.0;
  double goal     = 0.0;
};

inline CostTerms
cost_terms( const Vec3& candidate, const DecisionContext& ctx )
{
  CostTerms t;
  t.cohesion = cohesion_cost( candidate, ctx.predicted_neighbors, ctx.comm_range, ctx.profile );
  t.safety   = safety_cost( candidate.z(), ctx.profile );
  if( ctx.goal )
    t.goal = goal_cost( candidate, *ctx.goal, ctx.profile );
  return t;
}

inline double
weighted_objective( const CostProfile& profile, const CostTerms& t, bool has_goal )
{
  double v = profile.w_eta * t.cohesion + profile.w_z * t.safety;
  if( has_goal )
    v += profile.w_g * t.goal;
  return v;
}

// The goal term only exists once the agent holds a (candidate) sub-goal.
inline double
objective( const Vec3& candidate, const DecisionContext& ctx )
{
  return weighted_objective( ctx.profile, cost_terms( candidate, ctx ), ctx.goal.has_value() );
}

struct Feasibility
{
  bool   feasible  = true;
  double violation = 0.0;
};

inline Feasibility
feasible( const Vec3& candidate, const DecisionContext& ctx, const SearchBox& box )
{
  Feasibility f;
  for( int k = 0; k < 3; ++k )
  {
    if( candidate[k] < box.lower[k] )
    {
      f.feasible = false;
      f.violation += box.lower[k] - candidate[k];
    }
    else if( candidate[k] > box.upper[k] )
    {
      f.feasible = false;
      f.violation += candidate[k] - box.upper[k];
    }
  }
  const double dmin = ctx.profile.delta_min;
  auto separate = [&]( const Vec3& self, const Vec3& other ) {
    const double d = ( other - self ).norm();
    if( !( d > dmin ) )
    {
      f.feasible = false;
      f.violation += dmin - d;
    }
  };
  for( const auto& n : ctx.predicted_neighbors )
    separate( candidate, n );

  if( ctx.separation_samples > 1 && !ctx.tracks.empty() )
  {
    // Path of the position controller toward the candidate:
    // p + v tau + (c - p - v H) (tau / H)^2.
    const double h = ctx.horizon;
    const Vec3 bend = candidate - ctx.position - ctx.velocity * h;
    for( int k = 1; k < ctx.separation_samples; ++k )
    {
      const double tau = h * k / ctx.separation_samples;
      const double u   = tau / h;
      const Vec3 self  = ctx.position + ctx.velocity * tau + bend * ( u * u );
      for( const auto& t : ctx.tracks )
        separate( self, t.at( tau ) );
    }
  }
  return f;
}

inline Feasibility
feasible( const Vec3& candidate, const DecisionContext& ctx )
{
  return feasible( candidate, ctx, ctx.box() );
}

} // namespace drhc
