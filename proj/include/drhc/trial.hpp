#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "drhc/agent.hpp"
#include "drhc/core.hpp"
#include "drhc/costs.hpp"
#include "drhc/meshnet.hpp"
#include "drhc/optimizer.hpp"
#include "drhc/rng.hpp"
#include "drhc/world.hpp"

namespace drhc
{

struct Heterogeneity
{
  double velocity_noise_sigma     = 0.0;
  double acceleration_noise_sigma = 0.0;

  void validate() const
  {
    if( velocity_noise_sigma < 0.0 )
      throw ConfigError( "heterogeneity.velocity_noise_sigma", "must be non-negative" );
    if( acceleration_noise_sigma < 0.0 )
      throw ConfigError( "heterogeneity.acceleration_noise_sigma", "must be non-negative" );
  }
};

// Everything needed to run one trial apart from the seed.
struct TrialSetup
{
  WorldConfig   world;
  NetworkConfig network;
  CostProfile   profile;
  DEParams      de;
  AgentConfig   agent;
  Heterogeneity heterogeneity;
  std::size_t   n_agents = 5;

  void validate() const
  {
    world.validate();
    network.validate();
    profile.validate();
    de.validate();
    agent.validate();
    heterogeneity.validate();
    if( n_agents < 1 )
      throw ConfigError( "n_agents", "must be at least 1" );
  }
};

struct TileRecord
{
  TileIndex tile;
  double    time  = 0.0;
  AgentId   agent = kNoAgent;
};

struct TrialOutcome
{
  std::uint64_t seed              = 0;
  double        duration          = 0.0;
  double        fraction_searched = 0.0;
  std::size_t   collisions        = 0;
  double        heuristic         = 0.0;
  std::size_t   n_agents          = 0;
  std::size_t   tiles_total       = 0;
  std::size_t   tiles_searched    = 0;
  double        t_max             = 0.0;
  std::vector<TileRecord> per_tile_times;
};

struct HeuristicTerms
{
  double c_time = 0.0;
  double c_nsrh = 0.0;
  double c_clsn = 0.0;
  double total  = 0.0;
};

// Time, unsearched fraction and collision terms weighted 1 : 2 : 4.
inline HeuristicTerms
heuristic_terms( double t_trial, double t_max, double p_complete, std::size_t n_collisions, std::size_t n_agents )
{
  if( !( t_max > 0.0 ) || n_agents == 0 )
    throw std::invalid_argument( "heuristic: t_max and n_agents must be positive" );
  HeuristicTerms h;
  h.c_time = t_trial / t_max;
  h.c_nsrh = 1.0 - p_complete;
  h.c_clsn = n_collisions > 0 ? 0.25 + 0.75 * static_cast<double>( n_collisions ) / static_cast<double>( n_agents ) : 0.0;
  h.total  = h.c_time + 2.0 * h.c_nsrh + 4.0 * h.c_clsn;
  return h;
}

inline double
heuristic_e_c( double t_trial, double t_max, double p_complete, std::size_t n_collisions, std::size_t n_agents )
{
  return heuristic_terms( t_trial, t_max, p_complete, n_collisions, n_agents ).total;
}

// Hooks for traces and property checks. All optional.
struct TrialObserver
{
  std::function<void( const Delivery& )>     on_delivery;
  std::function<void( const AuctionEvent& )> on_auction;
  std::function<void( double now, std::span<const AgentState> )> on_tick;
};

// Grid-packed cluster in the bottom-left corner at search altitude.
inline std::vector<Vec3>
spawn_positions( const WorldConfig& world, std::size_t n )
{
  const double spacing = 2.0 * world.collision_radius;
  const auto per_row = static_cast<std::size_t>( std::ceil( std::sqrt( static_cast<double>( n ) ) ) );
  std::vector<Vec3> out;
  out.reserve( n );
  for( std::size_t i = 0; i < n; ++i )
  {
    const double x = spacing * static_cast<double>( 1 + i % per_row );
    const double y = spacing * static_cast<double>( 1 + i / per_row );
    out.emplace_back( x, y, world.search_altitude );
  }
  return out;
}

// Per-agent capability draws, made once at spawn from the trial seed.
inline std::vector<AgentState>
spawn_agents( const TrialSetup& setup, std::uint64_t seed )
{
  const auto& w = setup.world;
  Rng rng( derive_seed( seed, { stream::kSpawn } ) );
  std::normal_distribution<double> gauss( 0.0, 1.0 );

  std::vector<AgentState> states;
  const auto positions = spawn_positions( w, setup.n_agents );
  for( std::size_t i = 0; i < setup.n_agents; ++i )
  {
    AgentState s;
    s.id       = static_cast<AgentId>( i );
    s.position = positions[i];
    // Both draws are always taken so one axis of heterogeneity does not
    // shift the other's random stream.
    const double zv = gauss( rng );
    const double za = gauss( rng );
    s.max_speed_actual = std::max( 1.0, w.max_speed + setup.heterogeneity.velocity_noise_sigma * zv );
    const double da    = setup.heterogeneity.acceleration_noise_sigma * za;
    s.max_acc_actual   = Vec3( std::max( 0.5, w.max_acc_horizontal + da ), std::max( 0.5, w.max_acc_horizontal + da ),
                               std::max( 0.5, w.max_acc_vertical + da ) );
    states.push_back( s );
  }
  return states;
}

// One seeded trial, steppable for inspection. run() drives it to completion.
class Trial
{
public:
  Trial( TrialSetup setup, std::uint64_t seed, TrialObserver observer = {} )
    : setup_( std::move( setup ) )
    , seed_( seed )
    , observer_( std::move( observer ) )
    , tiles_( ( setup_.validate(), build_grid( setup_.world ) ) )
    , states_( spawn_agents( setup_, seed ) )
    , net_( setup_.network, derive_seed( seed, { stream::kNetwork } ), setup_.n_agents )
    , clock_{ setup_.world.sim_dt, 0 }
  {
    const auto& w = setup_.world;
    max_ticks_       = static_cast<std::uint64_t>( std::ceil( w.t_max / w.sim_dt - 1e-9 ) );
    update_every_    = std::max<std::uint64_t>( 1, static_cast<std::uint64_t>( std::llround( w.t_update / w.sim_dt ) ) );
    broadcast_every_ = std::max<std::uint64_t>( 1, static_cast<std::uint64_t>( std::llround( w.t_broadcast / w.sim_dt ) ) );

    for( const auto& s : states_ )
    {
      agents_.emplace_back( s.id, s.position, w.rows(), w.columns() );
      gps_.emplace_back( derive_seed( seed, { stream::kGps, s.id } ) );
    }
    // The launch roster is shared: every agent starts knowing where the
    // others were spawned.
    for( auto& a : agents_ )
      for( const auto& s : states_ )
        a.seed_neighbor( NeighborBelief{ s.id, s.position, Vec3::Zero(), Vec3::Zero(), 0.0 } );

    if( observer_.on_delivery )
      net_.set_trace( observer_.on_delivery );
  }

  const TrialSetup&              setup() const { return setup_; }
  const std::vector<Tile>&       tiles() const { return tiles_; }
  const std::vector<AgentState>& states() const { return states_; }
  const std::vector<Agent>&      agents() const { return agents_; }
  const MeshNetwork&             network() const { return net_; }
  double now() const { return clock_.now(); }
  std::size_t collisions() const { return collisions_.count(); }
  std::size_t searched_count() const { return searched_; }
  bool complete() const { return searched_ == tiles_.size(); }
  bool timed_out() const { return clock_.tick >= max_ticks_; }
  bool finished() const { return complete() || timed_out(); }

  // Advances one sim_dt tick. Returns false if the trial had already ended.
  bool step()
  {
    if( finished() )
      return false;
    const auto& w = setup_.world;
    const double now = clock_.now();
    const bool propagate = setup_.network.propagate_bids;

    auto inboxes = net_.deliver_due( now, states_ );

    std::vector<Message> outbox;
    if( clock_.tick % update_every_ == 0 )
    {
      DecisionInputs in;
      in.world   = &w;
      in.profile = &setup_.profile;
      in.agent   = &setup_.agent;
      in.tiles   = tiles_;
      in.now     = now;
      for( auto& a : agents_ )
      {
        in.de      = setup_.de;
        in.de.seed = derive_seed( seed_, { stream::kSolver, a.id(), clock_.tick } );
        auto res = a.decide( states_[a.id()], inboxes[a.id()], in, propagate );
        collect( res, outbox );
      }
    }
    else
    {
      // Between decision ticks messages are still absorbed.
      const ReconcileContext base{ 0, now, w.t_auction, propagate };
      for( auto& a : agents_ )
      {
        auto ctx    = base;
        ctx.self_id = a.id();
        collect( a.receive( inboxes[a.id()], ctx ), outbox );
      }
    }
    for( auto& m : outbox )
      net_.send( std::move( m ), states_, now );

    const double horizon = setup_.agent.horizon;
    for( auto& a : agents_ )
    {
      auto& s = states_[a.id()];
      s = step_kinematics( s, a.desired_position(), w.sim_dt, horizon );
    }

    const double after = now + w.sim_dt;
    for( auto& a : agents_ )
    {
      const auto& s = states_[a.id()];
      auto idx = tile_under( s.position, w );
      if( !idx )
        continue;
      auto& tile = tiles_[*idx];
      if( tile.true_state == TileState::Unsearched && check_tile_searched( s, tile, w ) )
      {
        tile.true_state  = TileState::Searched;
        tile.searched_by = a.id();
        tile.searched_at = after;
        ++searched_;
        auto res = a.mark_searched( tile.index, after, propagate );
        std::vector<Message> msgs;
        collect( res, msgs );
        for( auto& m : msgs )
          net_.send( std::move( m ), states_, after );
      }
    }

    collisions_.observe( states_, w.collision_radius );

    if( clock_.tick % broadcast_every_ == 0 )
      for( const auto& s : states_ )
        net_.send( broadcast_self( s, now, w.gps_noise_radius, gps_[s.id] ), states_, now );

    if( observer_.on_tick )
      observer_.on_tick( after, states_ );
    clock_.advance();
    return true;
  }

  // Lets in-flight traffic settle with agents frozen in place: messages are
  // ingested and auctions resolved, but nobody bids or moves.
  void drain( double limit_seconds )
  {
    const auto& w = setup_.world;
    const double end = clock_.now() + limit_seconds;
    double t = clock_.now();
    while( !net_.idle() && t <= end )
    {
      auto inboxes = net_.deliver_due( t, states_ );
      std::vector<Message> outbox;
      for( auto& a : agents_ )
      {
        const ReconcileContext ctx{ a.id(), t, w.t_auction, setup_.network.propagate_bids };
        collect( a.receive( inboxes[a.id()], ctx ), outbox );
      }
      for( auto& m : outbox )
        net_.send( std::move( m ), states_, t );
      t += w.sim_dt;
    }
  }

  TrialOutcome run()
  {
    while( step() )
    {}
    return outcome();
  }

  TrialOutcome outcome() const
  {
    const auto& w = setup_.world;
    TrialOutcome o;
    o.seed              = seed_;
    o.n_agents          = setup_.n_agents;
    o.tiles_total       = tiles_.size();
    o.tiles_searched    = searched_;
    o.fraction_searched = static_cast<double>( searched_ ) / static_cast<double>( tiles_.size() );
    o.collisions        = collisions_.count();
    o.t_max             = w.t_max;
    o.duration          = complete() ? std::min( clock_.now(), w.t_max ) : w.t_max;
    if( w.t_max > 0.0 )
      o.heuristic = heuristic_e_c( o.duration, w.t_max, o.fraction_searched, o.collisions, o.n_agents );
    else
      o.heuristic = 2.0 * ( 1.0 - o.fraction_searched );
    for( const auto& t : tiles_ )
      if( t.true_state == TileState::Searched )
        o.per_tile_times.push_back( { t.index, *t.searched_at, *t.searched_by } );
    std::sort( o.per_tile_times.begin(), o.per_tile_times.end(),
               []( const TileRecord& a, const TileRecord& b ) { return std::tie( a.time, a.agent ) < std::tie( b.time, b.agent ); } );
    return o;
  }

private:
  void collect( IngestResult& res, std::vector<Message>& outbox )
  {
    if( observer_.on_auction )
      for( const auto& e : res.events )
        observer_.on_auction( e );
    for( auto& m : res.outbound )
      outbox.push_back( std::move( m ) );
  }
  void collect( IngestResult&& res, std::vector<Message>& outbox ) { collect( res, outbox ); }

  TrialSetup              setup_;
  std::uint64_t           seed_;
  TrialObserver           observer_;
  std::vector<Tile>       tiles_;
  std::vector<AgentState> states_;
  std::vector<Agent>      agents_;
  std::vector<Rng>        gps_;
  MeshNetwork             net_;
  SimClock                clock_;
  CollisionTracker        collisions_;
  std::size_t             searched_        = 0;
  std::uint64_t           max_ticks_       = 0;
  std::uint64_t           update_every_    = 1;
  std::uint64_t           broadcast_every_ = 1;
};

inline TrialOutcome
run_trial( const TrialSetup& setup, std::uint64_t seed, TrialObserver observer = {} )
{
  return Trial( setup, seed, std::move( observer ) ).run();
}

// Centralized control baseline: tiles are laid out in a boustrophedon sweep,
// cut into contiguous chunks, one per agent, and flown in order with no
// communication.
inline TrialOutcome
run_flight_plan( const TrialSetup& setup, std::uint64_t seed )
{
  setup.validate();
  const auto& w = setup.world;
  auto tiles  = build_grid( w );
  auto states = spawn_agents( setup, seed );
  const int rows = w.rows(), cols = w.columns();

  std::vector<std::size_t> order;
  for( int c = 0; c < cols; ++c )
    for( int k = 0; k < rows; ++k )
      order.push_back( static_cast<std::size_t>( ( c % 2 == 0 ? k : rows - 1 - k ) * cols + c ) );

  const std::size_t n = states.size();
  std::vector<std::vector<std::size_t>> plan( n );
  for( std::size_t i = 0; i < order.size(); ++i )
    plan[std::min( n - 1, i * n / order.size() )].push_back( order[i] );
  std::vector<std::size_t> cursor( n, 0 );

  CollisionTracker collisions;
  std::size_t searched = 0;
  const auto max_ticks = static_cast<std::uint64_t>( std::ceil( w.t_max / w.sim_dt - 1e-9 ) );
  std::uint64_t tick = 0;
  for( ; tick < max_ticks && searched < tiles.size(); ++tick )
  {
    const double after = static_cast<double>( tick + 1 ) * w.sim_dt;
    for( std::size_t i = 0; i < n; ++i )
    {
      while( cursor[i] < plan[i].size() && tiles[plan[i][cursor[i]]].true_state == TileState::Searched )
        ++cursor[i];
      const Vec3 target = cursor[i] < plan[i].size() ? tiles[plan[i][cursor[i]]].center : states[i].position;
      states[i] = step_kinematics( states[i], target, w.sim_dt, setup.agent.horizon );
      if( auto idx = tile_under( states[i].position, w ) )
      {
        auto& t = tiles[*idx];
        if( t.true_state == TileState::Unsearched && check_tile_searched( states[i], t, w ) )
        {
          t.true_state  = TileState::Searched;
          t.searched_by = states[i].id;
          t.searched_at = after;
          ++searched;
        }
      }
    }
    collisions.observe( states, w.collision_radius );
  }

  TrialOutcome o;
  o.seed              = seed;
  o.n_agents          = n;
  o.tiles_total       = tiles.size();
  o.tiles_searched    = searched;
  o.fraction_searched = static_cast<double>( searched ) / static_cast<double>( tiles.size() );
  o.collisions        = collisions.count();
  o.t_max             = w.t_max;
  const bool done     = searched == tiles.size();
  o.duration          = done ? std::min( static_cast<double>( tick ) * w.sim_dt, w.t_max ) : w.t_max;
  o.heuristic = w.t_max > 0.0 ? heuristic_e_c( o.duration, w.t_max, o.fraction_searched, o.collisions, n ) : 2.0;
  for( const auto& t : tiles )
    if( t.true_state == TileState::Searched )
      o.per_tile_times.push_back( { t.index, *t.searched_at, *t.searched_by } );
  std::sort( o.per_tile_times.begin(), o.per_tile_times.end(),
             []( const TileRecord& a, const TileRecord& b ) { return std::tie( a.time, a.agent ) < std::tie( b.time, b.agent ); } );
  return o;
}

// Runs one trial per seed on up to `workers` threads. Results are in seed
// order whatever the scheduling; the first exception is rethrown.
inline std::vector<TrialOutcome>
run_trials( const TrialSetup& setup, std::span<const std::uint64_t> seeds, std::size_t workers = 1 )
{
  setup.validate();
  std::vector<TrialOutcome> out( seeds.size() );
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for( std::size_t i = next++; i < seeds.size(); i = next++ )
    {
      try
      {
        out[i] = run_trial( setup, seeds[i] );
      }
      catch( ... )
      {
        std::lock_guard lock( failure_mutex );
        if( !failure )
          failure = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>( workers, 1, std::max<std::size_t>( 1, seeds.size() ) );
  if( workers == 1 )
    work();
  else
  {
    std::vector<std::jthread> pool;
    for( std::size_t w = 0; w < workers; ++w )
      pool.emplace_back( work );
  }
  if( failure )
    std::rethrow_exception( failure );
  return out;
}

struct TrialSummary
{
  std::size_t n = 0;
  double mean_duration      = 0.0;
  double var_duration       = 0.0;
  double mean_pct_searched  = 0.0;
  double var_pct_searched   = 0.0;
  double mean_collisions    = 0.0;
  double var_collisions     = 0.0;
  double mean_heuristic     = 0.0;
  double var_heuristic      = 0.0;
};

namespace detail
{
inline std::pair<double, double>
mean_and_variance( std::span<const double> xs )
{
  double mean = 0.0;
  for( double x : xs )
    mean += x;
  mean /= static_cast<double>( xs.size() );
  if( xs.size() < 2 )
    return { mean, 0.0 };
  double ss = 0.0;
  for( double x : xs )
    ss += ( x - mean ) * ( x - mean );
  return { mean, ss / static_cast<double>( xs.size() - 1 ) };
}
} // namespace detail

// Sample means and unbiased sample variances; variance of one sample is 0.
inline TrialSummary
summarize( std::span<const TrialOutcome> outcomes )
{
  if( outcomes.empty() )
    throw std::invalid_argument( "summarize: no outcomes" );
  std::vector<double> dur, pct, col, ec;
  for( const auto& o : outcomes )
  {
    dur.push_back( o.duration );
    pct.push_back( 100.0 * o.fraction_searched );
    col.push_back( static_cast<double>( o.collisions ) );
    ec.push_back( o.heuristic );
  }
  TrialSummary s;
  s.n = outcomes.size();
  std::tie( s.mean_duration, s.var_duration )         = detail::mean_and_variance( dur );
  std::tie( s.mean_pct_searched, s.var_pct_searched ) = detail::mean_and_variance( pct );
  std::tie( s.mean_collisions, s.var_collisions )     = detail::mean_and_variance( col );
  std::tie( s.mean_heuristic, s.var_heuristic )       = detail::mean_and_variance( ec );
  return s;
}

} // namespace drhc
