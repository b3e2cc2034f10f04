#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "drhc/adaptation.hpp"
#include "drhc/agent.hpp"
#include "drhc/costs.hpp"
#include "drhc/meshnet.hpp"
#include "drhc/optimizer.hpp"
#include "drhc/trial.hpp"
#include "drhc/world.hpp"

namespace drhc
{

using Json = nlohmann::json;

struct Scenario
{
  std::string              name = "scenario";
  WorldConfig              world;
  NetworkConfig            network;
  CostProfile              profile;
  DEParams                 de;
  AgentConfig              agent;
  std::optional<AsaConfig> asa;
  std::size_t              n_agents = 5;
  std::size_t              n_seeds  = 20;
  std::uint64_t            seed     = 1;
  Heterogeneity            heterogeneity;

  TrialSetup setup() const
  {
    TrialSetup s;
    s.world         = world;
    s.network       = network;
    s.profile       = profile;
    s.de            = de;
    s.agent         = agent;
    s.heterogeneity = heterogeneity;
    s.n_agents      = n_agents;
    return s;
  }

  void validate() const
  {
    setup().validate();
    if( asa )
      asa->validate();
    if( n_seeds < 1 )
      throw ConfigError( "n_seeds", "must be at least 1" );
    if( name.empty() || name.find_first_of( "/\\," ) != std::string::npos )
      throw ConfigError( "name", "must be non-empty without slashes or commas" );
  }
};

namespace detail
{
// Reads one JSON object section, remembering which keys were consumed so
// leftovers can be reported by path.
class Section
{
public:
  Section( const Json& j, std::string path )
    : j_( j )
    , path_( std::move( path ) )
  {
    if( !j_.is_object() )
      throw ConfigError( path_.empty() ? "<root>" : path_, "must be an object" );
  }

  std::string key_path( const std::string& key ) const { return path_.empty() ? key : path_ + "." + key; }
  bool has( const std::string& key ) const { return j_.contains( key ); }
  void skip( const std::string& key ) { seen_.insert( key ); }

  template <class T>
  void read( const std::string& key, T& out, bool required = false )
  {
    seen_.insert( key );
    auto it = j_.find( key );
    if( it == j_.end() )
    {
      if( required )
        throw ConfigError( key_path( key ), "is required" );
      return;
    }
    try
    {
      if constexpr( std::is_same_v<T, bool> )
      {
        if( !it->is_boolean() )
          throw ConfigError( key_path( key ), "must be a boolean" );
      }
      else if constexpr( std::is_arithmetic_v<T> )
      {
        if( !it->is_number() )
          throw ConfigError( key_path( key ), "must be a number" );
        if constexpr( std::is_integral_v<T> )
          if( !it->is_number_integer() )
            throw ConfigError( key_path( key ), "must be an integer" );
        if constexpr( std::is_unsigned_v<T> )
          if( it->is_number_integer() && !it->is_number_unsigned() && it->template get<long long>() < 0 )
            throw ConfigError( key_path( key ), "must be non-negative" );
      }
      else if constexpr( std::is_same_v<T, std::string> )
      {
        if( !it->is_string() )
          throw ConfigError( key_path( key ), "must be a string" );
      }
      out = it->template get<T>();
    }
    catch( const Json::exception& e )
    {
      throw ConfigError( key_path( key ), e.what() );
    }
  }

  template <class T>
  void read( const std::string& key, std::optional<T>& out )
  {
    if( !has( key ) )
    {
      seen_.insert( key );
      return;
    }
    T v{};
    read( key, v );
    out = v;
  }

  Section child( const std::string& key )
  {
    seen_.insert( key );
    return Section( j_.at( key ), key_path( key ) );
  }

  void finish() const
  {
    for( auto it = j_.begin(); it != j_.end(); ++it )
      if( !seen_.count( it.key() ) )
        throw ConfigError( key_path( it.key() ), "unknown key" );
  }

private:
  const Json&           j_;
  std::string           path_;
  std::set<std::string> seen_;
};
} // namespace detail

inline Json
to_json( const CostProfile& p )
{
  return Json{ { "w_eta", p.w_eta },         { "w_z", p.w_z },         { "w_g", p.w_g },
               { "delta_min", p.delta_min }, { "c_penalty", p.c_penalty }, { "alpha", p.alpha },
               { "c_dist", p.c_dist },       { "z_min", p.z_min },     { "z_max", p.z_max } };
}

inline void
read_profile( detail::Section s, CostProfile& p )
{
  s.read( "w_eta", p.w_eta );
  s.read( "w_z", p.w_z );
  s.read( "w_g", p.w_g );
  s.read( "delta_min", p.delta_min );
  s.read( "c_penalty", p.c_penalty );
  s.read( "alpha", p.alpha );
  s.read( "c_dist", p.c_dist );
  s.read( "z_min", p.z_min );
  s.read( "z_max", p.z_max );
  s.finish();
}

inline CostProfile
profile_from_json( const Json& j, const CostProfile& defaults = {} )
{
  CostProfile p = defaults;
  read_profile( detail::Section( j, "profile" ), p );
  p.validate();
  return p;
}

inline Json
to_json( const WorldConfig& w )
{
  return Json{ { "area_width", w.area_width },
               { "area_height", w.area_height },
               { "tile_size", w.tile_size },
               { "z_min", w.z_min },
               { "z_max", w.z_max },
               { "search_radius", w.search_radius },
               { "search_altitude", w.search_altitude },
               { "altitude_tolerance", w.altitude_tolerance },
               { "collision_radius", w.collision_radius },
               { "comm_range", w.comm_range },
               { "max_speed", w.max_speed },
               { "max_acc_horizontal", w.max_acc_horizontal },
               { "max_acc_vertical", w.max_acc_vertical },
               { "sim_dt", w.sim_dt },
               { "t_update", w.t_update },
               { "t_broadcast", w.t_broadcast },
               { "t_auction", w.t_auction },
               { "t_max", w.t_max },
               { "gps_noise_radius", w.gps_noise_radius } };
}

inline Json
to_json( const NetworkConfig& n )
{
  return Json{ { "mean_delay", n.mean_delay },     { "delay_jitter", n.jitter() },       { "drop_probability", n.drop_probability },
               { "comm_range", n.comm_range },     { "max_hops", n.max_hops },           { "propagate_bids", n.propagate_bids } };
}

inline Json
to_json( const DEParams& d )
{
  return Json{ { "population_size", d.population_size },
               { "max_generations", d.max_generations },
               { "differential_weight", d.differential_weight },
               { "crossover_rate", d.crossover_rate } };
}

inline Json
to_json( const AgentConfig& a )
{
  return Json{ { "horizon", a.horizon },   { "staleness_limit", a.staleness_limit },
               { "w_dist", a.w_dist },     { "w_near", a.w_near },
               { "escape_when_infeasible", a.escape_when_infeasible }, { "separation_samples", a.separation_samples } };
}

inline Json
to_json( const AsaConfig& a )
{
  Json bounds = Json::object();
  for( std::size_t i = 0; i < Theta::kSize; ++i )
    bounds[std::string( Theta::kNames[i] )] = Json::array( { a.bounds[i].min, a.bounds[i].max } );
  return Json{ { "max_trials", a.max_trials },   { "temperature_decay", a.temperature_decay },
               { "reanneal_period", a.reanneal_period }, { "trials_per_eval", a.trials_per_eval },
               { "seed", a.seed },               { "bounds", bounds } };
}

inline Json
to_json( const Scenario& s )
{
  Json j{ { "name", s.name },
          { "world", to_json( s.world ) },
          { "network", to_json( s.network ) },
          { "profile", to_json( s.profile ) },
          { "de", to_json( s.de ) },
          { "agent", to_json( s.agent ) },
          { "n_agents", s.n_agents },
          { "n_seeds", s.n_seeds },
          { "seed", s.seed },
          { "heterogeneity",
            { { "velocity_noise_sigma", s.heterogeneity.velocity_noise_sigma },
              { "acceleration_noise_sigma", s.heterogeneity.acceleration_noise_sigma } } } };
  if( s.asa )
    j["asa"] = to_json( *s.asa );
  return j;
}

// Only world.area_width, world.area_height and world.tile_size are required;
// everything else falls back to the defaults. Unknown keys are errors.
inline Scenario
scenario_from_json( const Json& j )
{
  Scenario s;
  detail::Section root( j, "" );
  root.read( "name", s.name );
  root.read( "n_agents", s.n_agents );
  root.read( "n_seeds", s.n_seeds );
  root.read( "seed", s.seed );

  if( !root.has( "world" ) )
    throw ConfigError( "world.area_width", "is required" );
  {
    auto w = root.child( "world" );
    auto& c = s.world;
    w.read( "area_width", c.area_width, true );
    w.read( "area_height", c.area_height, true );
    w.read( "tile_size", c.tile_size, true );
    w.read( "z_min", c.z_min );
    w.read( "z_max", c.z_max );
    w.read( "search_radius", c.search_radius );
    w.read( "search_altitude", c.search_altitude );
    w.read( "altitude_tolerance", c.altitude_tolerance );
    w.read( "collision_radius", c.collision_radius );
    w.read( "comm_range", c.comm_range );
    w.read( "max_speed", c.max_speed );
    w.read( "max_acc_horizontal", c.max_acc_horizontal );
    w.read( "max_acc_vertical", c.max_acc_vertical );
    w.read( "sim_dt", c.sim_dt );
    w.read( "t_update", c.t_update );
    w.read( "t_broadcast", c.t_broadcast );
    w.read( "t_auction", c.t_auction );
    w.read( "t_max", c.t_max );
    w.read( "gps_noise_radius", c.gps_noise_radius );
    w.finish();
  }

  s.network.comm_range = s.world.comm_range;
  if( root.has( "network" ) )
  {
    auto n = root.child( "network" );
    n.read( "mean_delay", s.network.mean_delay );
    n.read( "delay_jitter", s.network.delay_jitter );
    n.read( "drop_probability", s.network.drop_probability );
    n.read( "comm_range", s.network.comm_range );
    n.read( "max_hops", s.network.max_hops );
    n.read( "propagate_bids", s.network.propagate_bids );
    n.finish();
  }

  s.profile.z_min = s.world.z_min;
  s.profile.z_max = s.world.z_max;
  if( root.has( "profile" ) )
    read_profile( root.child( "profile" ), s.profile );

  if( root.has( "de" ) )
  {
    auto d = root.child( "de" );
    d.read( "population_size", s.de.population_size );
    d.read( "max_generations", s.de.max_generations );
    d.read( "differential_weight", s.de.differential_weight );
    d.read( "crossover_rate", s.de.crossover_rate );
    d.finish();
  }

  if( root.has( "agent" ) )
  {
    auto a = root.child( "agent" );
    a.read( "horizon", s.agent.horizon );
    a.read( "staleness_limit", s.agent.staleness_limit );
    a.read( "w_dist", s.agent.w_dist );
    a.read( "w_near", s.agent.w_near );
    a.read( "escape_when_infeasible", s.agent.escape_when_infeasible );
    a.read( "separation_samples", s.agent.separation_samples );
    a.finish();
  }

  if( root.has( "heterogeneity" ) )
  {
    auto h = root.child( "heterogeneity" );
    h.read( "velocity_noise_sigma", s.heterogeneity.velocity_noise_sigma );
    h.read( "acceleration_noise_sigma", s.heterogeneity.acceleration_noise_sigma );
    h.finish();
  }

  if( root.has( "asa" ) && !j.at( "asa" ).is_null() )
  {
    AsaConfig asa;
    auto a = root.child( "asa" );
    a.read( "max_trials", asa.max_trials );
    a.read( "temperature_decay", asa.temperature_decay );
    a.read( "reanneal_period", asa.reanneal_period );
    a.read( "trials_per_eval", asa.trials_per_eval );
    a.read( "seed", asa.seed );
    if( a.has( "bounds" ) )
    {
      auto b = a.child( "bounds" );
      for( std::size_t i = 0; i < Theta::kSize; ++i )
      {
        const std::string key( Theta::kNames[i] );
        std::optional<std::array<double, 2>> range;
        try
        {
          b.read( key, range );
        }
        catch( const ConfigError& )
        {
          throw ConfigError( b.key_path( key ), "must be a [min, max] pair of numbers" );
        }
        if( range )
          asa.bounds[i] = { ( *range )[0], ( *range )[1] };
      }
      b.finish();
    }
    a.finish();
    s.asa = asa;
  }
  else
    root.skip( "asa" );

  root.finish();
  s.validate();
  return s;
}

inline Json
load_json_file( const std::filesystem::path& path, const std::string& what = "file" )
{
  std::ifstream in( path );
  if( !in )
    throw ConfigError( what, "cannot open " + path.string() );
  try
  {
    return Json::parse( in );
  }
  catch( const Json::parse_error& e )
  {
    throw ConfigError( what, std::string( "parse error in " ) + path.string() + ": " + e.what() );
  }
}

inline Scenario
load_scenario( const std::filesystem::path& path )
{
  return scenario_from_json( load_json_file( path, "scenario" ) );
}

inline bool
operator==( const Scenario& a, const Scenario& b )
{
  return to_json( a ) == to_json( b );
}

} // namespace drhc
