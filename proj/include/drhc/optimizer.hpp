#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "drhc/core.hpp"
#include "drhc/costs.hpp"
#include "drhc/rng.hpp"

namespace drhc
{

struct DEParams
{
  int           population_size     = 24;
  int           max_generations     = 40;
  double        differential_weight = 0.5;
  double        crossover_rate      = 0.9;
  std::uint64_t seed                = 0;

  void validate() const
  {
    if( population_size < 4 )
      throw ConfigError( "de.population_size", "must be at least 4" );
    if( max_generations < 0 )
      throw ConfigError( "de.max_generations", "must be non-negative" );
    if( !( crossover_rate >= 0.0 && crossover_rate <= 1.0 ) )
      throw ConfigError( "de.crossover_rate", "must lie in [0, 1]" );
    if( !( differential_weight > 0.0 && differential_weight < 2.0 ) )
      throw ConfigError( "de.differential_weight", "must lie in (0, 2)" );
  }
};

struct MinimizeResult
{
  Vec3   best_point = Vec3::Zero();
  double best_value = 0.0;
  bool   feasible   = false;
  double violation  = 0.0;
  long   evaluations = 0;
};

inline Feasibility
unconstrained( const Vec3& )
{
  return {};
}

namespace detail
{
// Multiply-shift draws from one 64-bit engine output; the bias for the small
// ranges used here is below 2^-50.
inline int
below( Rng& rng, int n )
{
  return static_cast<int>( ( static_cast<unsigned __int128>( rng() ) * static_cast<unsigned>( n ) ) >> 64 );
}

inline double
unit( Rng& rng )
{
  return static_cast<double>( rng() >> 11 ) * 0x1.0p-53;
}

struct Candidate
{
  Vec3        x;
  double      value;
  Feasibility constraint;
};

// Deb's rules: feasible beats infeasible, feasibles by objective,
// infeasibles by violation. Equal fitness is not "better".
inline bool
better( const Candidate& a, const Candidate& b )
{
  if( a.constraint.feasible != b.constraint.feasible )
    return a.constraint.feasible;
  if( a.constraint.feasible )
    return a.value < b.value;
  return a.constraint.violation < b.constraint.violation;
}

struct NoObserver
{
  void operator()( int, const MinimizeResult& ) const {}
};
} // namespace detail

// DE/rand/1/bin over a box with feasibility-rule selection. The observer is
// called after every generation with the incumbent.
template <class Objective, class Constraint, class Observer = detail::NoObserver>
MinimizeResult
minimize( Objective&& objective, Constraint&& constraint, const SearchBox& box, const DEParams& params,
          Observer&& observer = {} )
{
  Rng rng( params.seed );
  const int n = params.population_size;

  auto evaluate = [&]( const Vec3& x ) { return detail::Candidate{ x, objective( x ), constraint( x ) }; };

  std::vector<detail::Candidate> population;
  population.reserve( static_cast<std::size_t>( n ) );
  for( int i = 0; i < n; ++i )
  {
    Vec3 x;
    for( int k = 0; k < 3; ++k )
      x[k] = box.lower[k] + ( box.upper[k] - box.lower[k] ) * detail::unit( rng );
    population.push_back( evaluate( box.clamp( x ) ) );
  }

  long evals = n;
  std::size_t best = 0;
  for( std::size_t i = 1; i < population.size(); ++i )
    if( detail::better( population[i], population[best] ) )
      best = i;

  auto snapshot = [&] {
    const auto& b = population[best];
    return MinimizeResult{ b.x, b.value, b.constraint.feasible, b.constraint.violation, evals };
  };

  std::vector<detail::Candidate> next = population;

  for( int gen = 0; gen < params.max_generations; ++gen )
  {
    for( int i = 0; i < n; ++i )
    {
      int r1, r2, r3;
      do r1 = detail::below( rng, n ); while( r1 == i );
      do r2 = detail::below( rng, n ); while( r2 == i || r2 == r1 );
      do r3 = detail::below( rng, n ); while( r3 == i || r3 == r1 || r3 == r2 );

      const Vec3 mutant = population[r1].x + params.differential_weight * ( population[r2].x - population[r3].x );
      const int forced = detail::below( rng, 3 );
      Vec3 trial = population[i].x;
      for( int k = 0; k < 3; ++k )
        if( k == forced || detail::unit( rng ) < params.crossover_rate )
          trial[k] = mutant[k];

      auto cand = evaluate( box.clamp( trial ) );
      ++evals;
      next[i] = detail::better( cand, population[i] ) ? cand : population[i];
    }
    population.swap( next );
    for( std::size_t i = 0; i < population.size(); ++i )
      if( detail::better( population[i], population[best] ) )
        best = i;
    observer( gen, snapshot() );
  }
  return snapshot();
}

} // namespace drhc
