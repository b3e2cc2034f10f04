#include <iostream>

#include <CLI11.hpp>

#include "drhc/commands.hpp"

int
main( int argc, char** argv )
{
  using namespace drhc;

  CLI::App app{ "Decentralized receding-horizon swarm search simulator" };
  app.require_subcommand( 1 );

  CommandOptions opts;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto add_common = [&]( CLI::App* cmd ) {
    cmd->add_option( "--scenario", opts.scenario, "Scenario JSON file" )->required()->check( CLI::ExistingFile );
    cmd->add_option( "--out", out_dir, "Output root (default $DRHC_OUTPUT_ROOT or ./results)" );
    cmd->add_option( "--workers", opts.workers, "Worker threads for trial batches" )->check( CLI::PositiveNumber );
  };

  auto* run = app.add_subcommand( "run", "Run one trial" );
  add_common( run );
  auto* run_seed = run->add_option( "--seed", seed, "Trial seed (default: scenario seed)" );

  auto* sweep = app.add_subcommand( "sweep", "Run n_seeds trials per axis value and profile" );
  add_common( sweep );
  sweep->add_option( "--axis", opts.axis, "delay | velocity_noise | acceleration_noise | n_agents" )->required();
  sweep->add_option( "--values", opts.values, "Axis values" )->required()->delimiter( ',' );
  sweep->add_option( "--profile", opts.profiles, "Cost profile JSON (repeatable)" )->check( CLI::ExistingFile );

  auto* adapt = app.add_subcommand( "adapt", "Adapt the cost profile with simulated annealing" );
  add_common( adapt );
  auto* adapt_seed = adapt->add_option( "--seed", seed, "Annealing seed (default: asa.seed)" );

  auto* plot = app.add_subcommand( "plotdata", "Reshape sweep results into long-format CSV" );
  plot->add_option( "results", opts.results, "Results directory" )->required();

  try
  {
    app.parse( argc, argv );
  }
  catch( const CLI::ParseError& e )
  {
    const int code = app.exit( e );
    return code == 0 ? 0 : kExitConfig;
  }

  if( !out_dir.empty() )
    opts.out = out_dir;
  if( ( *run && run_seed->count() ) || ( *adapt && adapt_seed->count() ) )
    opts.seed = seed;

  if( *run )
    return cmd_run( opts );
  if( *sweep )
    return cmd_sweep( opts );
  if( *adapt )
    return cmd_adapt( opts );
  return cmd_plotdata( opts );
}
