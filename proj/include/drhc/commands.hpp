#pragma once

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "drhc/adaptation.hpp"
#include "drhc/scenario.hpp"
#include "drhc/trial.hpp"

namespace drhc
{

namespace fs = std::filesystem;

enum ExitCode : int
{
  kExitOk      = 0,
  kExitConfig  = 2,
  kExitRuntime = 3
};

// Shortest text that parses back to the same double.
inline std::string
format_number( double v )
{
  char buf[64];
  auto [end, ec] = std::to_chars( buf, buf + sizeof buf, v );
  return ec == std::errc() ? std::string( buf, end ) : std::string( "nan" );
}

inline Json
to_json( const TrialOutcome& o )
{
  Json tiles = Json::array();
  for( const auto& t : o.per_tile_times )
    tiles.push_back( { { "row", t.tile.row }, { "col", t.tile.col }, { "time", t.time }, { "agent", t.agent } } );
  return Json{ { "seed", o.seed },
               { "duration", o.duration },
               { "fraction_searched", o.fraction_searched },
               { "collisions", o.collisions },
               { "heuristic", o.heuristic },
               { "n_agents", o.n_agents },
               { "tiles_total", o.tiles_total },
               { "tiles_searched", o.tiles_searched },
               { "t_max", o.t_max },
               { "per_tile_times", tiles } };
}

// Rendered outcome JSON. Stable across runs: keys are sorted and numbers
// use shortest round-trip form.
inline std::string
outcome_text( const TrialOutcome& o )
{
  return to_json( o ).dump( 2 ) + "\n";
}

struct CommandOptions
{
  fs::path                     scenario;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path>      out;
  std::size_t                  workers = 1;
  std::vector<fs::path>        profiles;
  std::string                  axis;
  std::vector<double>          values;
  fs::path                     results;
};

inline fs::path
output_root( const CommandOptions& opts )
{
  if( opts.out )
    return *opts.out;
  if( const char* env = std::getenv( "DRHC_OUTPUT_ROOT" ) ; env && *env )
    return env;
  return "results";
}

// One run directory, <root>/<scenario>/<timestamp>. All writes go through
// this object.
class RunDirectory
{
public:
  RunDirectory( const fs::path& root, const std::string& scenario )
  {
    const auto now = std::chrono::system_clock::to_time_t( std::chrono::system_clock::now() );
    std::tm tm{};
    gmtime_r( &now, &tm );
    char stamp[32];
    std::strftime( stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm );
    fs::path base = root / scenario / stamp;
    path_ = base;
    for( int k = 1; fs::exists( path_ ); ++k )
      path_ = base.string() + "-" + std::to_string( k );
    fs::create_directories( path_ );
  }

  const fs::path& path() const { return path_; }

  void write( const fs::path& relative, const std::string& text )
  {
    std::lock_guard lock( mutex_ );
    const auto full = path_ / relative;
    fs::create_directories( full.parent_path() );
    std::ofstream out( full, std::ios::binary );
    out << text;
    if( !out )
      throw std::runtime_error( "cannot write " + full.string() );
  }

private:
  fs::path   path_;
  std::mutex mutex_;
};

inline std::string
summary_line( const std::string& name, const TrialOutcome& o )
{
  std::ostringstream s;
  s << name << " seed=" << o.seed << " duration=" << format_number( o.duration ) << "s searched=" << o.tiles_searched << "/"
    << o.tiles_total << " collisions=" << o.collisions << " E_c=" << format_number( o.heuristic );
  return s.str();
}

namespace detail
{
template <class F>
int
guarded( std::ostream& err, F&& body )
{
  try
  {
    return body();
  }
  catch( const ConfigError& e )
  {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  catch( const std::exception& e )
  {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
} // namespace detail

inline int
cmd_run( const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr )
{
  return detail::guarded( err, [&] {
    Scenario sc = load_scenario( opts.scenario );
    const std::uint64_t seed = opts.seed.value_or( sc.seed );
    sc.seed = seed;
    const auto outcome = run_trial( sc.setup(), seed );

    RunDirectory dir( output_root( opts ), sc.name );
    dir.write( "config.json", to_json( sc ).dump( 2 ) + "\n" );
    dir.write( fs::path( "trials" ) / ( "seed_" + std::to_string( seed ) + ".json" ), outcome_text( outcome ) );
    out << summary_line( sc.name, outcome ) << "\n" << "wrote " << dir.path().string() << "\n";
    return static_cast<int>( kExitOk );
  } );
}

inline const std::vector<std::string>&
sweep_axes()
{
  static const std::vector<std::string> axes{ "delay", "velocity_noise", "acceleration_noise", "n_agents" };
  return axes;
}

inline void
apply_axis( TrialSetup& setup, const std::string& axis, double value )
{
  if( axis == "delay" )
  {
    setup.network.mean_delay = value;
    setup.network.delay_jitter.reset();
  }
  else if( axis == "velocity_noise" )
    setup.heterogeneity.velocity_noise_sigma = value;
  else if( axis == "acceleration_noise" )
    setup.heterogeneity.acceleration_noise_sigma = value;
  else if( axis == "n_agents" )
  {
    if( !( value >= 1.0 ) || value != std::floor( value ) )
      throw ConfigError( "values", "n_agents values must be positive integers" );
    setup.n_agents = static_cast<std::size_t>( value );
  }
  else
    throw ConfigError( "axis", "unknown axis '" + axis + "'" );
}

struct NamedProfile
{
  std::string name;
  CostProfile profile;
};

// Sweep seeds are scenario.seed, scenario.seed + 1, ... so any single trial
// can be replayed with `run --seed`.
inline std::vector<std::uint64_t>
sweep_seeds( const Scenario& sc )
{
  std::vector<std::uint64_t> seeds;
  for( std::size_t k = 0; k < sc.n_seeds; ++k )
    seeds.push_back( sc.seed + k );
  return seeds;
}

inline const char* kSweepHeader =
    "scenario,axis,value,profile,n_seeds,mean_duration_s,var_duration_s,mean_pct_searched,var_pct_searched,"
    "mean_collisions,var_collisions,mean_E_c,var_E_c\n";

inline int
cmd_sweep( const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr )
{
  return detail::guarded( err, [&] {
    const Scenario sc = load_scenario( opts.scenario );
    if( std::find( sweep_axes().begin(), sweep_axes().end(), opts.axis ) == sweep_axes().end() )
      throw ConfigError( "axis", "must be one of delay, velocity_noise, acceleration_noise, n_agents" );
    if( opts.values.empty() )
      throw ConfigError( "values", "must not be empty" );

    std::vector<NamedProfile> profiles;
    if( opts.profiles.empty() )
      profiles.push_back( { "scenario", sc.profile } );
    for( const auto& p : opts.profiles )
      profiles.push_back( { p.stem().string(), profile_from_json( load_json_file( p, "profile" ), sc.profile ) } );

    std::vector<TrialSetup> setups;
    for( double v : opts.values )
      for( const auto& np : profiles )
      {
        TrialSetup s = sc.setup();
        s.profile    = np.profile;
        apply_axis( s, opts.axis, v );
        s.validate();
        setups.push_back( s );
      }

    RunDirectory dir( output_root( opts ), sc.name );
    Json config = to_json( sc );
    config["sweep"] = { { "axis", opts.axis }, { "values", opts.values } };
    for( const auto& np : profiles )
      config["sweep"]["profiles"][np.name] = to_json( np.profile );
    dir.write( "config.json", config.dump( 2 ) + "\n" );

    const auto seeds = sweep_seeds( sc );
    std::string sweep = kSweepHeader;
    std::string trials = "scenario,axis,value,profile,seed,duration_s,pct_searched,collisions,E_c\n";
    std::size_t k = 0;
    for( double v : opts.values )
      for( const auto& np : profiles )
      {
        const auto outcomes = run_trials( setups[k++], seeds, opts.workers );
        const auto s = summarize( outcomes );
        const std::string prefix = sc.name + "," + opts.axis + "," + format_number( v ) + "," + np.name + ",";
        sweep += prefix + std::to_string( s.n ) + "," + format_number( s.mean_duration ) + "," + format_number( s.var_duration ) + ","
               + format_number( s.mean_pct_searched ) + "," + format_number( s.var_pct_searched ) + ","
               + format_number( s.mean_collisions ) + "," + format_number( s.var_collisions ) + ","
               + format_number( s.mean_heuristic ) + "," + format_number( s.var_heuristic ) + "\n";
        for( const auto& o : outcomes )
        {
          trials += prefix + std::to_string( o.seed ) + "," + format_number( o.duration ) + ","
                  + format_number( 100.0 * o.fraction_searched ) + "," + std::to_string( o.collisions ) + ","
                  + format_number( o.heuristic ) + "\n";
          dir.write( fs::path( "trials" ) / ( np.name + "_" + opts.axis + "_" + format_number( v ) + "_seed_" + std::to_string( o.seed ) + ".json" ),
                     outcome_text( o ) );
        }
        out << opts.axis << "=" << format_number( v ) << " profile=" << np.name << " mu_t=" << format_number( s.mean_duration )
            << " var_t=" << format_number( s.var_duration ) << " searched=" << format_number( s.mean_pct_searched )
            << "% collisions=" << format_number( s.mean_collisions ) << "\n";
      }
    dir.write( "sweep.csv", sweep );
    dir.write( "trials.csv", trials );
    out << "wrote " << dir.path().string() << "\n";
    return static_cast<int>( kExitOk );
  } );
}

inline std::string
trace_csv( const AdaptationResult& r )
{
  std::string s = "iteration,T_C";
  for( auto name : Theta::kNames )
    s += "," + std::string( name );
  s += ",E_c,accepted,best_E_c\n";
  for( const auto& row : r.trace )
  {
    s += std::to_string( row.iteration ) + "," + format_number( row.temperature );
    for( double v : row.proposed.values )
      s += "," + format_number( v );
    s += "," + format_number( row.e_c ) + "," + ( row.accepted ? "1" : "0" ) + "," + format_number( row.best_e_c ) + "\n";
  }
  return s;
}

inline int
cmd_adapt( const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr )
{
  return detail::guarded( err, [&] {
    Scenario sc = load_scenario( opts.scenario );
    if( !sc.asa )
      throw ConfigError( "asa", "an asa block is required for adapt" );
    if( opts.seed )
      sc.asa->seed = *opts.seed;

    RunDirectory dir( output_root( opts ), sc.name );
    dir.write( "config.json", to_json( sc ).dump( 2 ) + "\n" );
    const auto result = run_adaptation( *sc.asa, sc.setup(), opts.workers );
    dir.write( "adapt_trace.csv", trace_csv( result ) );
    if( result.failure )
    {
      err << "adaptation failed: " << *result.failure << "\n";
      return static_cast<int>( kExitRuntime );
    }
    dir.write( "profile.json", to_json( result.best_profile ).dump( 2 ) + "\n" );
    out << "initial E_c=" << format_number( result.initial_e_c ) << " final E_c=" << format_number( result.best_e_c ) << "\n"
        << "wrote " << dir.path().string() << "\n";
    return static_cast<int>( kExitOk );
  } );
}

namespace detail
{
inline std::vector<std::string>
split_csv_line( const std::string& line )
{
  std::vector<std::string> cells;
  std::stringstream ss( line );
  std::string cell;
  while( std::getline( ss, cell, ',' ) )
    cells.push_back( cell );
  if( !line.empty() && line.back() == ',' )
    cells.emplace_back();
  return cells;
}

inline bool
parse_number( const std::string& s, double& v )
{
  auto [p, ec] = std::from_chars( s.data(), s.data() + s.size(), v );
  return ec == std::errc() && p == s.data() + s.size();
}
} // namespace detail

struct PlotRow
{
  std::string scenario, axis, value, profile, metric;
  double mean = 0.0, variance = 0.0;
};

// Reads every sweep.csv under `root`. Files that do not parse are reported
// to `warn` and skipped.
inline std::vector<PlotRow>
collect_plot_rows( const fs::path& root, std::ostream& warn )
{
  std::vector<fs::path> files;
  if( fs::is_directory( root ) )
    for( const auto& e : fs::recursive_directory_iterator( root ) )
      if( e.is_regular_file() && e.path().filename() == "sweep.csv" )
        files.push_back( e.path() );
  std::sort( files.begin(), files.end() );

  static const std::vector<std::pair<std::string, std::size_t>> metrics{
      { "duration_s", 5 }, { "pct_searched", 7 }, { "collisions", 9 }, { "E_c", 11 } };

  std::vector<PlotRow> rows;
  for( const auto& f : files )
  {
    std::ifstream in( f );
    std::string header;
    std::getline( in, header );
    if( header + "\n" != kSweepHeader )
    {
      warn << "warning: skipping " << f.string() << ": unexpected header\n";
      continue;
    }
    std::vector<PlotRow> mine;
    bool ok = true;
    std::string line;
    while( ok && std::getline( in, line ) )
    {
      if( line.empty() )
        continue;
      const auto c = detail::split_csv_line( line );
      if( c.size() != 13 )
      {
        ok = false;
        break;
      }
      for( const auto& [metric, col] : metrics )
      {
        PlotRow r{ c[0], c[1], c[2], c[3], metric };
        if( !detail::parse_number( c[col], r.mean ) || !detail::parse_number( c[col + 1], r.variance ) )
        {
          ok = false;
          break;
        }
        mine.push_back( r );
      }
    }
    if( !ok )
    {
      warn << "warning: skipping " << f.string() << ": malformed row\n";
      continue;
    }
    rows.insert( rows.end(), mine.begin(), mine.end() );
  }
  std::stable_sort( rows.begin(), rows.end(), []( const PlotRow& a, const PlotRow& b ) { return a.scenario < b.scenario; } );
  return rows;
}

inline int
cmd_plotdata( const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr )
{
  return detail::guarded( err, [&] {
    if( !fs::is_directory( opts.results ) )
      throw ConfigError( "results", "not a directory: " + opts.results.string() );
    const auto rows = collect_plot_rows( opts.results, err );
    if( rows.empty() )
    {
      out << "no results\n";
      return static_cast<int>( kExitRuntime );
    }
    std::string text = "scenario,axis,value,profile,metric,mean,variance\n";
    for( const auto& r : rows )
      text += r.scenario + "," + r.axis + "," + r.value + "," + r.profile + "," + r.metric + "," + format_number( r.mean ) + ","
            + format_number( r.variance ) + "\n";
    const auto path = opts.results / "plotdata.csv";
    std::ofstream f( path, std::ios::binary );
    f << text;
    if( !f )
      throw std::runtime_error( "cannot write " + path.string() );
    out << rows.size() << " rows written to " << path.string() << "\n";
    return static_cast<int>( kExitOk );
  } );
}

} // namespace drhc
