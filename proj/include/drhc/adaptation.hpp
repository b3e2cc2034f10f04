#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drhc/core.hpp"
#include "drhc/costs.hpp"
#include "drhc/rng.hpp"
#include "drhc/trial.hpp"

namespace drhc
{

// The adapted subset of a CostProfile, in a fixed order.
struct Theta
{
  static constexpr std::size_t kSize = 5;
  static constexpr std::array<std::string_view, kSize> kNames{ "w_eta", "w_z", "w_g", "delta_min", "c_penalty" };

  std::array<double, kSize> values{};

  static Theta from( const CostProfile& p ) { return Theta{ { p.w_eta, p.w_z, p.w_g, p.delta_min, p.c_penalty } }; }

  CostProfile apply( CostProfile p ) const
  {
    p.w_eta     = values[0];
    p.w_z       = values[1];
    p.w_g       = values[2];
    p.delta_min = values[3];
    p.c_penalty = values[4];
    return p;
  }

  double&       operator[]( std::size_t i ) { return values[i]; }
  double        operator[]( std::size_t i ) const { return values[i]; }
  friend bool operator==( const Theta&, const Theta& ) = default;
};

struct Interval
{
  double min = 0.0;
  double max = 1.0;
  friend bool operator==( const Interval&, const Interval& ) = default;
};

using ThetaBounds = std::array<Interval, Theta::kSize>;

inline constexpr ThetaBounds kDefaultThetaBounds{ Interval{ 0, 1 }, Interval{ 0, 1 }, Interval{ 0, 1 }, Interval{ 0, 100 },
                                                  Interval{ 0, 1 } };

struct AsaConfig
{
  int           max_trials        = 50;
  double        temperature_decay = 0.95;
  int           reanneal_period   = 25;
  ThetaBounds   bounds            = kDefaultThetaBounds;
  int           trials_per_eval   = 1;
  std::uint64_t seed              = 0;

  void validate() const
  {
    if( max_trials < 0 )
      throw ConfigError( "asa.max_trials", "must be non-negative" );
    if( !( temperature_decay > 0.0 && temperature_decay < 1.0 ) )
      throw ConfigError( "asa.temperature_decay", "must lie in (0, 1)" );
    if( reanneal_period < 1 )
      throw ConfigError( "asa.reanneal_period", "must be at least 1" );
    if( trials_per_eval < 1 )
      throw ConfigError( "asa.trials_per_eval", "must be at least 1" );
    for( std::size_t i = 0; i < Theta::kSize; ++i )
      if( !( bounds[i].min <= bounds[i].max ) )
        throw ConfigError( "asa.bounds." + std::string( Theta::kNames[i] ), "min must not exceed max" );
  }
};

inline double
initial_temperature( int max_trials, double decay )
{
  return std::pow( decay, -static_cast<double>( max_trials ) );
}

// T_0 decay^(i mod period): decays geometrically and resets to T_0 every
// reanneal_period iterations.
inline double
temperature_at( int iteration, const AsaConfig& cfg )
{
  const double t0 = initial_temperature( cfg.max_trials, cfg.temperature_decay );
  return t0 * std::pow( cfg.temperature_decay, static_cast<double>( iteration % cfg.reanneal_period ) );
}

struct AsaState
{
  Theta  current;
  double e_min       = std::numeric_limits<double>::infinity();
  double e_prev      = std::numeric_limits<double>::max();
  double temperature = 1.0;
  double t0          = 1.0;
  int    iteration   = 0;
};

// Uniform step whose range shrinks with T_C / T_0, centered on the incumbent
// and clamped into the box.
inline Theta
propose( const AsaState& state, const ThetaBounds& bounds, Rng& rng )
{
  const double scale = state.temperature / state.t0;
  Theta out;
  for( std::size_t i = 0; i < Theta::kSize; ++i )
  {
    const double w  = state.current[i];
    const double lo = ( bounds[i].min - w ) * scale;
    const double hi = ( bounds[i].max - w ) * scale;
    const double u  = std::uniform_real_distribution<double>( 0.0, 1.0 )( rng );
    out[i] = std::clamp( w + lo + ( hi - lo ) * u, bounds[i].min, bounds[i].max );
  }
  return out;
}

// One acceptance test. v is drawn every call so the stream does not depend
// on which branch fires.
inline bool
accept( const Theta& candidate, double e_candidate, AsaState& state, Rng& rng )
{
  const double v = std::uniform_real_distribution<double>( 0.0, 1.0 )( rng );
  const bool take = e_candidate < state.e_min || std::exp( ( state.e_prev - e_candidate ) / state.temperature ) > v;
  if( take )
  {
    state.current = candidate;
    state.e_min   = std::min( state.e_min, e_candidate );
  }
  state.e_prev = e_candidate;
  return take;
}

struct AsaTraceRow
{
  int    iteration   = 0;
  double temperature = 0.0;
  Theta  proposed;
  double e_c         = 0.0;
  bool   accepted    = false;
  double best_e_c    = 0.0;
};

struct AdaptationResult
{
  CostProfile              initial_profile;
  double                   initial_e_c = 0.0;
  CostProfile              best_profile;
  double                   best_e_c = 0.0;
  std::vector<AsaTraceRow> trace;
  std::optional<std::string> failure;
};

// Seeds of the trials scoring iteration `iteration`; iteration -1 scores the
// starting profile.
inline std::vector<std::uint64_t>
evaluation_seeds( const AsaConfig& cfg, int iteration )
{
  std::vector<std::uint64_t> seeds;
  for( int k = 0; k < cfg.trials_per_eval; ++k )
    seeds.push_back( derive_seed( cfg.seed, { stream::kTrial, static_cast<std::uint64_t>( iteration + 1 ), static_cast<std::uint64_t>( k ) } ) );
  return seeds;
}

// Evaluator: double(const CostProfile&, int iteration). The best profile is
// the lowest-scoring of the starting profile and every candidate.
template <class Evaluator>
AdaptationResult
run_adaptation( const AsaConfig& cfg, const CostProfile& initial, Evaluator&& evaluate )
{
  cfg.validate();
  AdaptationResult result;
  result.initial_profile = initial;
  result.best_profile    = initial;
  try
  {
    result.initial_e_c = evaluate( initial, -1 );
  }
  catch( const std::exception& e )
  {
    result.failure = std::string( "initial evaluation: " ) + e.what();
    return result;
  }
  result.best_e_c = result.initial_e_c;

  Rng rng( derive_seed( cfg.seed, { stream::kAsa } ) );
  AsaState state;
  state.current = Theta::from( initial );
  state.t0      = initial_temperature( cfg.max_trials, cfg.temperature_decay );

  for( int i = 0; i < cfg.max_trials; ++i )
  {
    state.iteration   = i;
    state.temperature = temperature_at( i, cfg );
    const Theta candidate = propose( state, cfg.bounds, rng );
    const CostProfile profile = candidate.apply( initial );
    double e;
    try
    {
      e = evaluate( profile, i );
    }
    catch( const std::exception& ex )
    {
      result.failure = "iteration " + std::to_string( i ) + ": " + ex.what();
      return result;
    }
    const bool took = accept( candidate, e, state, rng );
    if( e < result.best_e_c )
    {
      result.best_e_c     = e;
      result.best_profile = profile;
    }
    result.trace.push_back( { i, state.temperature, candidate, e, took, result.best_e_c } );
  }
  return result;
}

// Scores a profile by the mean E_c over the iteration's seeded trials.
inline AdaptationResult
run_adaptation( const AsaConfig& cfg, const TrialSetup& setup, std::size_t workers = 1 )
{
  setup.validate();
  return run_adaptation( cfg, setup.profile, [&]( const CostProfile& profile, int iteration ) {
    TrialSetup s = setup;
    s.profile    = profile;
    const auto seeds    = evaluation_seeds( cfg, iteration );
    const auto outcomes = run_trials( s, seeds, workers );
    double sum = 0.0;
    for( const auto& o : outcomes )
      sum += o.heuristic;
    return sum / static_cast<double>( outcomes.size() );
  } );
}

} // namespace drhc
