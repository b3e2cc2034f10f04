#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "drhc/bidding.hpp"
#include "drhc/core.hpp"
#include "drhc/costs.hpp"
#include "drhc/meshnet.hpp"
#include "drhc/optimizer.hpp"
#include "drhc/rng.hpp"
#include "drhc/world.hpp"

namespace drhc
{

struct AgentConfig
{
  double horizon         = 2.0;  // look-ahead of one D-RHC solve, seconds
  double staleness_limit = 10.0; // beliefs older than this are ignored
  double w_dist          = 1.0;
  double w_near          = 0.3;
  bool   escape_when_infeasible = true;
  int    separation_samples     = 4; // separation checks per horizon

  void validate() const
  {
    if( !( horizon > 0.0 ) )
      throw ConfigError( "agent.horizon", "must be positive" );
    if( !( staleness_limit > 0.0 ) )
      throw ConfigError( "agent.staleness_limit", "must be positive" );
    if( w_dist < 0.0 )
      throw ConfigError( "agent.w_dist", "must be non-negative" );
    if( w_near < 0.0 )
      throw ConfigError( "agent.w_near", "must be non-negative" );
    if( separation_samples < 1 )
      throw ConfigError( "agent.separation_samples", "must be at least 1" );
  }
};

struct NeighborBelief
{
  AgentId id           = kNoAgent;
  Vec3    position     = Vec3::Zero();
  Vec3    velocity     = Vec3::Zero();
  Vec3    acceleration = Vec3::Zero();
  double  observed_at  = 0.0;
};

// Dead reckoning to the given time.
inline Vec3
predict_neighbor( const NeighborBelief& belief, double horizon_time )
{
  const double dt = horizon_time - belief.observed_at;
  return belief.position + belief.velocity * dt + 0.5 * belief.acceleration * dt * dt;
}

struct KnowledgeBase
{
  int rows    = 0;
  int columns = 0;
  std::map<AgentId, NeighborBelief> neighbors;
  std::vector<TileBelief>           tiles; // row-major
  std::optional<TileIndex>          current_goal;
  std::optional<Bid>                candidate_bid;
  std::uint64_t                     malformed_messages = 0;
  std::uint64_t                     unknown_messages   = 0;

  KnowledgeBase() = default;
  KnowledgeBase( int rows_, int columns_ )
    : rows( rows_ )
    , columns( columns_ )
  {
    tiles.reserve( static_cast<std::size_t>( rows * columns ) );
    for( int r = 0; r < rows; ++r )
      for( int c = 0; c < columns; ++c )
      {
        TileBelief b;
        b.index = { r, c };
        tiles.push_back( b );
      }
  }

  bool valid( TileIndex t ) const { return t.row >= 0 && t.col >= 0 && t.row < rows && t.col < columns; }
  TileBelief&       tile( TileIndex t ) { return tiles[static_cast<std::size_t>( t.row * columns + t.col )]; }
  const TileBelief& tile( TileIndex t ) const { return tiles[static_cast<std::size_t>( t.row * columns + t.col )]; }

  std::size_t count( TileStatus s ) const
  {
    return static_cast<std::size_t>( std::count_if( tiles.begin(), tiles.end(), [s]( const TileBelief& b ) { return b.state == s; } ) );
  }

  // The tile the agent is currently flying to: its claim, or else the
  // candidate it is bidding on.
  std::optional<TileIndex> target() const
  {
    if( current_goal )
      return current_goal;
    if( candidate_bid )
      return candidate_bid->tile;
    return std::nullopt;
  }
};

struct AuctionEvent
{
  double           time  = 0.0;
  TileIndex        tile;
  std::string_view event;
  AgentId          agent = kNoAgent;
  double           value = 0.0;
};

struct IngestResult
{
  std::vector<Message>      outbound;
  std::vector<AuctionEvent> events;
};

namespace detail
{
// Restores the invariants between current_goal / candidate_bid and the tile
// beliefs after a belief update.
inline void
sync_targets( KnowledgeBase& kb, AgentId self, double now, std::vector<AuctionEvent>& events )
{
  if( kb.current_goal && kb.tile( *kb.current_goal ).state != TileStatus::ClaimedBySelf )
  {
    const auto& b = kb.tile( *kb.current_goal );
    events.push_back( { now, *kb.current_goal, b.state == TileStatus::Searched ? "goal_searched" : "claim_dropped", self,
                        b.best_known_bid } );
    kb.current_goal.reset();
  }
  if( kb.candidate_bid )
  {
    const auto& b = kb.tile( kb.candidate_bid->tile );
    if( b.state != TileStatus::InAuction || b.best_known_bidder != self )
    {
      if( b.state == TileStatus::ClaimedBySelf && !kb.current_goal )
        kb.current_goal = kb.candidate_bid->tile;
      else if( b.state != TileStatus::ClaimedBySelf )
        events.push_back( { now, kb.candidate_bid->tile, "outbid", self, b.best_known_bid } );
      kb.candidate_bid.reset();
    }
  }
}
} // namespace detail

// Applies a delivered batch in order: position updates are last-writer-wins
// by sender timestamp, bidding traffic goes through reconcile().
inline IngestResult
ingest( KnowledgeBase& kb, std::span<const Message> batch, const ReconcileContext& ctx )
{
  IngestResult out;
  for( const auto& msg : batch )
  {
    switch( msg.kind )
    {
    case MessageKind::PositionUpdate:
    {
      if( msg.sender == ctx.self_id )
        break;
      const auto* body = std::get_if<PositionPayload>( &msg.payload );
      if( !body )
      {
        ++kb.malformed_messages;
        break;
      }
      auto it = kb.neighbors.find( msg.sender );
      if( it != kb.neighbors.end() && it->second.observed_at >= msg.sent_at )
        break;
      kb.neighbors[msg.sender] = NeighborBelief{ msg.sender, body->position, body->velocity, body->acceleration, msg.sent_at };
      break;
    }
    case MessageKind::BidAnnounce:
    case MessageKind::ClaimAnnounce:
    case MessageKind::Correction:
    case MessageKind::SearchedAnnounce:
    {
      TileIndex tile;
      if( const auto* bid = std::get_if<Bid>( &msg.payload ) )
        tile = bid->tile;
      else if( const auto* s = std::get_if<SearchedPayload>( &msg.payload ) )
        tile = s->tile;
      else
      {
        ++kb.malformed_messages;
        break;
      }
      if( !kb.valid( tile ) || ( msg.kind == MessageKind::SearchedAnnounce ) != std::holds_alternative<SearchedPayload>( msg.payload ) )
      {
        ++kb.malformed_messages;
        break;
      }
      auto result = reconcile( msg, kb.tile( tile ), ctx );
      kb.tile( tile ) = result.belief;
      for( auto& m : result.outbound )
        out.outbound.push_back( std::move( m ) );
      detail::sync_targets( kb, ctx.self_id, ctx.now, out.events );
      break;
    }
    default:
      ++kb.unknown_messages;
      break;
    }
  }
  return out;
}

// Position report with horizontal GPS noise drawn uniformly from a disk.
inline Message
broadcast_self( const AgentState& self, double now, double gps_noise_radius, Rng& rng )
{
  PositionPayload body{ self.position, self.velocity, self.acceleration };
  if( gps_noise_radius > 0.0 )
  {
    std::uniform_real_distribution<double> u( 0.0, 1.0 );
    const double r     = gps_noise_radius * std::sqrt( u( rng ) );
    const double theta = 2.0 * std::numbers::pi * u( rng );
    body.position.x() += r * std::cos( theta );
    body.position.y() += r * std::sin( theta );
  }
  return make_position_update( self.id, now, body );
}

struct DecisionInputs
{
  const WorldConfig*       world   = nullptr;
  const CostProfile*       profile = nullptr;
  const AgentConfig*       agent   = nullptr;
  DEParams                 de;
  std::span<const Tile>    tiles;
  double                   now = 0.0;
};

struct DecisionResult
{
  Vec3            desired_position = Vec3::Zero();
  bool            feasible         = true;
  SearchBox       box;
  DecisionContext context;
};

inline std::vector<Vec3>
fresh_neighbor_predictions( const KnowledgeBase& kb, AgentId self, double now, double at_time, double staleness_limit )
{
  std::vector<Vec3> out;
  out.reserve( kb.neighbors.size() );
  for( const auto& [id, belief] : kb.neighbors )
  {
    if( id == self || now - belief.observed_at > staleness_limit )
      continue;
    out.push_back( predict_neighbor( belief, at_time ) );
  }
  return out;
}

// Fresh beliefs dead-reckoned to `now`, as tracks in time since `now`.
inline std::vector<NeighborTrack>
fresh_neighbor_tracks( const KnowledgeBase& kb, AgentId self, double now, double staleness_limit )
{
  std::vector<NeighborTrack> out;
  out.reserve( kb.neighbors.size() );
  for( const auto& [id, belief] : kb.neighbors )
  {
    if( id == self || now - belief.observed_at > staleness_limit )
      continue;
    const double dt = now - belief.observed_at;
    out.push_back( { predict_neighbor( belief, now ), belief.velocity + belief.acceleration * dt, belief.acceleration } );
  }
  return out;
}

// One D-RHC solve: predict neighbours at the horizon, minimize the weighted
// costs over the reachable box subject to the separation constraint. An agent
// with no tile to fly to steers for `hold` instead, if given.
inline DecisionResult
decision_step( const KnowledgeBase& kb, const AgentState& self, const DecisionInputs& in,
               const std::optional<Vec3>& hold = std::nullopt )
{
  const auto& acfg = *in.agent;
  DecisionResult r;
  DecisionContext& ctx = r.context;
  ctx.position   = self.position;
  ctx.velocity   = self.velocity;
  ctx.max_acc    = self.max_acc_actual;
  ctx.horizon    = acfg.horizon;
  ctx.comm_range = in.world->comm_range;
  ctx.profile    = *in.profile;
  ctx.predicted_neighbors = fresh_neighbor_predictions( kb, self.id, in.now, in.now + acfg.horizon, acfg.staleness_limit );
  ctx.separation_samples  = acfg.separation_samples;
  if( acfg.separation_samples > 1 )
    ctx.tracks = fresh_neighbor_tracks( kb, self.id, in.now, acfg.staleness_limit );
  if( auto t = kb.target() )
    ctx.goal = in.tiles[static_cast<std::size_t>( t->row * kb.columns + t->col )].center;
  else
    ctx.goal = hold;

  r.box = ctx.box();
  auto result = minimize( [&]( const Vec3& x ) { return objective( x, ctx ); },
                          [&]( const Vec3& x ) { return feasible( x, ctx, r.box ); }, r.box, in.de );
  r.feasible = result.feasible;
  if( result.feasible || acfg.escape_when_infeasible )
    r.desired_position = result.best_point;
  else
    r.desired_position = self.position; // brake in place
  return r;
}

// One swarm member's decision process. Its true kinematic state is owned by
// the world and passed in each tick.
class Agent
{
public:
  Agent( AgentId id, const Vec3& spawn_position, int rows, int columns )
    : id_( id )
    , kb_( rows, columns )
    , desired_( spawn_position )
  {}

  AgentId id() const { return id_; }
  KnowledgeBase&       knowledge() { return kb_; }
  const KnowledgeBase& knowledge() const { return kb_; }
  const Vec3&      desired_position() const { return desired_; }
  bool             last_solve_feasible() const { return last_feasible_; }
  const SearchBox& last_box() const { return last_box_; }
  const std::optional<Vec3>& hold_position() const { return hold_; }

  // Ingest and auction upkeep only (used while the network drains).
  IngestResult receive( std::span<const Message> inbox, const ReconcileContext& ctx )
  {
    auto out = ingest( kb_, inbox, ctx );
    resolve_auctions( ctx, out );
    return out;
  }

  // One decision tick: ingest -> auctions / bidding -> predict + optimize.
  IngestResult decide( const AgentState& self, std::span<const Message> inbox, const DecisionInputs& in,
                       bool propagate_bids )
  {
    const ReconcileContext ctx{ id_, in.now, in.world->t_auction, propagate_bids };
    auto out = receive( inbox, ctx );
    if( !kb_.current_goal && !kb_.candidate_bid )
      place_bid( self, in, ctx, out );

    if( kb_.target() )
      hold_.reset();
    else if( !hold_ )
      hold_ = self.position;

    auto decision  = decision_step( kb_, self, in, hold_ );
    desired_       = decision.desired_position;
    last_feasible_ = decision.feasible;
    last_box_      = decision.box;
    return out;
  }

  // The agent's own sensor reports that it has just searched `tile`.
  IngestResult mark_searched( TileIndex tile, double now, bool propagate_bids )
  {
    IngestResult out;
    auto& b = kb_.tile( tile );
    b.state            = TileStatus::Searched;
    b.searched_by_self = true;
    out.events.push_back( { now, tile, "searched", id_, 0.0 } );
    out.outbound.push_back( make_searched_message( id_, now, tile, propagate_bids ) );
    detail::sync_targets( kb_, id_, now, out.events );
    return out;
  }

  void seed_neighbor( const NeighborBelief& belief )
  {
    if( belief.id != id_ )
      kb_.neighbors[belief.id] = belief;
  }

private:
  void resolve_auctions( const ReconcileContext& ctx, IngestResult& out )
  {
    for( auto& belief : kb_.tiles )
    {
      if( belief.state != TileStatus::InAuction || ctx.now < belief.auction_deadline )
        continue;
      auto res = resolve_deadline( belief, ctx.self_id, ctx.now, ctx.propagate );
      belief = res.belief;
      if( res.claim )
      {
        out.events.push_back( { ctx.now, belief.index, "claimed", ctx.self_id, belief.best_known_bid } );
        out.outbound.push_back( std::move( *res.claim ) );
      }
    }
    detail::sync_targets( kb_, ctx.self_id, ctx.now, out.events );
  }

  void place_bid( const AgentState& self, const DecisionInputs& in, const ReconcileContext& ctx, IngestResult& out )
  {
    const auto& acfg = *in.agent;
    const auto others = fresh_neighbor_predictions( kb_, id_, in.now, in.now, acfg.staleness_limit );
    const BidWeights weights{ acfg.w_dist, acfg.w_near };
    const double d_max = in.world->diagonal();

    std::optional<std::size_t> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for( std::size_t i = 0; i < kb_.tiles.size(); ++i )
    {
      if( kb_.tiles[i].state != TileStatus::Unclaimed )
        continue;
      const double s = score_tile( self.position, in.tiles[i].center, others, weights, d_max );
      if( s > best_score )
      {
        best_score = s;
        best       = i;
      }
    }
    if( !best )
      return;

    Bid bid{ kb_.tiles[*best].index, best_score, id_, in.now };
    auto update = open_or_raise( bid, kb_.tiles[*best], in.world->t_auction, in.now, ctx.propagate );
    kb_.tiles[*best]  = update.belief;
    kb_.candidate_bid = bid;
    out.events.push_back( { in.now, bid.tile, "bid", id_, bid.value } );
    out.outbound.push_back( std::move( update.announce ) );
  }

  AgentId       id_;
  KnowledgeBase kb_;
  Vec3          desired_;
  bool          last_feasible_ = true;
  SearchBox     last_box_;
  std::optional<Vec3> hold_;
};

} // namespace drhc
