#include <gtest/gtest.h>

#include <random>

#include "drhc/agent.hpp"

using namespace drhc;

namespace
{

struct Fixture
{
  WorldConfig       world;
  CostProfile       profile;
  AgentConfig       agent;
  std::vector<Tile> tiles;

  Fixture()
  {
    world.area_width  = 100;
    world.area_height = 100;
    tiles             = build_grid( world );
  }

  DecisionInputs inputs( double now = 0.0, std::uint64_t seed = 1 ) const
  {
    DecisionInputs in;
    in.world   = &world;
    in.profile = &profile;
    in.agent   = &agent;
    in.tiles   = tiles;
    in.now     = now;
    in.de.seed = seed;
    return in;
  }
};

AgentState
self_at( Vec3 p, Vec3 v = Vec3::Zero() )
{
  AgentState s;
  s.id       = 0;
  s.position = p;
  s.velocity = v;
  return s;
}

Message
position_from( AgentId sender, double at, Vec3 p )
{
  return make_position_update( sender, at, PositionPayload{ p, Vec3::Zero(), Vec3::Zero() } );
}

} // namespace

TEST( Predict, ZeroElapsed )
{
  NeighborBelief b{ 1, Vec3( 1, 2, 3 ), Vec3( 4, 5, 6 ), Vec3( 7, 8, 9 ), 2.0 };
  EXPECT_EQ( predict_neighbor( b, 2.0 ), b.position );
}

TEST( Predict, ConstantVelocity )
{
  NeighborBelief b{ 1, Vec3::Zero(), Vec3( 10, 0, 0 ), Vec3::Zero(), 1.0 };
  EXPECT_TRUE( predict_neighbor( b, 1.5 ).isApprox( Vec3( 5, 0, 0 ) ) );
}

TEST( Predict, ConstantAcceleration )
{
  NeighborBelief b{ 1, Vec3::Zero(), Vec3::Zero(), Vec3( 0, 0, 6 ), 0.0 };
  EXPECT_TRUE( predict_neighbor( b, 1.0 ).isApprox( Vec3( 0, 0, 3 ) ) );
}

TEST( Ingest, NewerPositionReplaces )
{
  KnowledgeBase kb( 4, 4 );
  std::vector<Message> batch{ position_from( 3, 1.0, Vec3( 1, 0, 0 ) ), position_from( 3, 2.0, Vec3( 2, 0, 0 ) ) };
  ingest( kb, batch, ReconcileContext{ 0, 2.0, 0.5, true } );
  EXPECT_EQ( kb.neighbors.at( 3 ).position, Vec3( 2, 0, 0 ) );
  EXPECT_EQ( kb.neighbors.at( 3 ).observed_at, 2.0 );
}

TEST( Ingest, LateOlderPositionDiscarded )
{
  KnowledgeBase kb( 4, 4 );
  std::vector<Message> batch{ position_from( 3, 2.0, Vec3( 2, 0, 0 ) ), position_from( 3, 1.0, Vec3( 1, 0, 0 ) ) };
  ingest( kb, batch, ReconcileContext{ 0, 2.0, 0.5, true } );
  EXPECT_EQ( kb.neighbors.at( 3 ).position, Vec3( 2, 0, 0 ) );
}

TEST( Ingest, MixedBatchAppliedInOrder )
{
  KnowledgeBase kb( 4, 4 );
  std::vector<Message> batch{
    position_from( 3, 1.0, Vec3( 9, 9, 40 ) ),
    make_bid_message( MessageKind::BidAnnounce, 4, 1.0, Bid{ { 1, 1 }, 0.3, 4, 1.0 }, true ),
    make_bid_message( MessageKind::ClaimAnnounce, 5, 1.0, Bid{ { 1, 1 }, 0.6, 5, 1.0 }, true ),
  };
  ingest( kb, batch, ReconcileContext{ 0, 1.1, 0.5, true } );
  EXPECT_EQ( kb.neighbors.size(), 1u );
  const auto& t = kb.tile( { 1, 1 } );
  EXPECT_EQ( t.state, TileStatus::ClaimedByOther );
  EXPECT_EQ( t.best_known_bidder, 5u );

  // The same two bids in the opposite order leave the claim holder unchanged.
  KnowledgeBase kb2( 4, 4 );
  std::vector<Message> reversed{ batch[0], batch[2], batch[1] };
  ingest( kb2, reversed, ReconcileContext{ 0, 1.1, 0.5, true } );
  EXPECT_EQ( kb2.tile( { 1, 1 } ).best_known_bidder, 5u );
  EXPECT_EQ( kb2.tile( { 1, 1 } ).state, TileStatus::ClaimedByOther );
}

TEST( Ingest, MalformedTileCounted )
{
  KnowledgeBase kb( 2, 2 );
  std::vector<Message> batch{ make_bid_message( MessageKind::BidAnnounce, 4, 1.0, Bid{ { 5, 0 }, 0.3, 4, 1.0 }, true ),
                              make_searched_message( 4, 1.0, { -1, 0 }, true ) };
  auto out = ingest( kb, batch, ReconcileContext{} );
  EXPECT_EQ( kb.malformed_messages, 2u );
  EXPECT_TRUE( out.outbound.empty() );
  for( const auto& t : kb.tiles )
  {
    EXPECT_EQ( t.state, TileStatus::Unclaimed );
  }
}

TEST( Ingest, SearchedClearsGoal )
{
  KnowledgeBase kb( 2, 2 );
  kb.tile( { 0, 1 } ).state = TileStatus::ClaimedBySelf;
  kb.tile( { 0, 1 } ).best_known_bidder = 0;
  kb.current_goal     = TileIndex{ 0, 1 };
  std::vector<Message> batch{ make_searched_message( 4, 1.0, { 0, 1 }, true ) };
  ingest( kb, batch, ReconcileContext{ 0, 1.0, 0.5, true } );
  EXPECT_FALSE( kb.current_goal );
  EXPECT_FALSE( kb.target() );
}

TEST( Broadcast, NoNoiseIsExact )
{
  Rng rng( 1 );
  auto s = self_at( Vec3( 3, 4, 40 ), Vec3( 1, 2, 3 ) );
  auto m = broadcast_self( s, 7.0, 0.0, rng );
  const auto& body = std::get<PositionPayload>( m.payload );
  EXPECT_EQ( body.position, s.position );
  EXPECT_EQ( body.velocity, s.velocity );
  EXPECT_EQ( m.sent_at, 7.0 );
  EXPECT_EQ( m.kind, MessageKind::PositionUpdate );
  EXPECT_FALSE( m.propagate );
}

TEST( Broadcast, NoiseWithinHorizontalDisk )
{
  Rng rng( 2 );
  auto s = self_at( Vec3( 3, 4, 40 ) );
  double widest = 0;
  for( int i = 0; i < 20000; ++i )
  {
    const auto msg   = broadcast_self( s, 0, 2.0, rng );
    const auto& body = std::get<PositionPayload>( msg.payload );
    const double d = horizontal_distance( body.position, s.position );
    ASSERT_LE( d, 2.0 );
    ASSERT_EQ( body.position.z(), 40.0 );
    widest = std::max( widest, d );
  }
  EXPECT_GT( widest, 1.9 );
}

TEST( DecisionStep, ClaimedGoalIsApproached )
{
  Fixture f;
  f.profile.w_g = 1.0;
  f.profile.w_eta = 0.0;
  f.profile.w_z = 0.0;
  KnowledgeBase kb( f.world.rows(), f.world.columns() );
  kb.tile( { 3, 3 } ).state = TileStatus::ClaimedBySelf;
  kb.current_goal = TileIndex{ 3, 3 };
  auto s = self_at( Vec3( 10, 10, 40 ) );
  auto r = decision_step( kb, s, f.inputs() );
  const Vec3 goal = f.tiles[15].center;
  EXPECT_TRUE( r.feasible );
  EXPECT_TRUE( r.box.contains( r.desired_position ) );
  EXPECT_LT( ( r.desired_position - goal ).norm(), ( s.position - goal ).norm() - 1.0 );
  // The goal is far outside the box, so the optimum sits on the box face.
  const Vec3 push = r.desired_position - s.position;
  EXPECT_NEAR( push.x(), r.box.upper.x() - s.position.x(), 1e-2 );
  EXPECT_NEAR( push.y(), r.box.upper.y() - s.position.y(), 1e-2 );
}

TEST( DecisionStep, KeepsSeparationFromNeighborAhead )
{
  Fixture f;
  f.profile.delta_min = 10;
  KnowledgeBase kb( f.world.rows(), f.world.columns() );
  kb.tile( { 0, 3 } ).state = TileStatus::ClaimedBySelf;
  kb.current_goal = TileIndex{ 0, 3 };
  auto s = self_at( Vec3( 5, 12.5, 40 ) );
  const Vec3 other( 16, 12.5, 40 );
  kb.neighbors[1] = NeighborBelief{ 1, other, Vec3::Zero(), Vec3::Zero(), 0.0 };
  auto r = decision_step( kb, s, f.inputs() );
  ASSERT_TRUE( r.feasible );
  // The goal lies beyond the neighbour, so the unconstrained optimum would
  // violate the separation.
  EXPECT_LT( ( r.box.upper.x() - other.x() ), 10.0 );
  EXPECT_GT( ( r.desired_position - other ).norm(), 10.0 );
  EXPECT_TRUE( r.box.contains( r.desired_position ) );
}

TEST( DecisionStep, SafetyOnlyDescendsTowardZmin )
{
  Fixture f;
  f.profile.w_eta = 0;
  f.profile.w_g   = 0;
  f.profile.w_z   = 1;
  KnowledgeBase kb( f.world.rows(), f.world.columns() );
  auto s = self_at( Vec3( 50, 50, 60 ) );
  auto r = decision_step( kb, s, f.inputs() );
  EXPECT_LT( r.desired_position.z(), 60.0 );
  EXPECT_NEAR( r.desired_position.z(), r.box.lower.z(), 1e-2 );
}

TEST( DecisionStep, StaleBeliefsIgnored )
{
  Fixture f;
  KnowledgeBase kb( f.world.rows(), f.world.columns() );
  kb.neighbors[1] = NeighborBelief{ 1, Vec3( 50, 50, 40 ), Vec3::Zero(), Vec3::Zero(), 0.0 };
  kb.neighbors[2] = NeighborBelief{ 2, Vec3( 60, 50, 40 ), Vec3::Zero(), Vec3::Zero(), 15.0 };
  auto s = self_at( Vec3( 50, 50, 40 ) );
  auto r = decision_step( kb, s, f.inputs( 20.0 ) );
  ASSERT_EQ( r.context.predicted_neighbors.size(), 1u );
  EXPECT_EQ( r.context.predicted_neighbors[0], Vec3( 60, 50, 40 ) );
  EXPECT_EQ( r.context.tracks.size(), 1u );
}

TEST( DecisionStep, InfeasibleFallback )
{
  Fixture f;
  f.profile.delta_min = 50;
  f.agent.escape_when_infeasible = false;
  KnowledgeBase kb( f.world.rows(), f.world.columns() );
  kb.neighbors[1] = NeighborBelief{ 1, Vec3( 50, 50, 40 ), Vec3::Zero(), Vec3::Zero(), 0.0 };
  auto s = self_at( Vec3( 51, 50, 40 ) );
  auto r = decision_step( kb, s, f.inputs() );
  EXPECT_FALSE( r.feasible );
  EXPECT_EQ( r.desired_position, s.position );

  f.agent.escape_when_infeasible = true;
  r = decision_step( kb, s, f.inputs() );
  EXPECT_FALSE( r.feasible );
  EXPECT_TRUE( r.box.contains( r.desired_position ) );
  EXPECT_GT( ( r.desired_position - Vec3( 50, 50, 40 ) ).norm(), 1.0 );
}

TEST( AgentLoop, BidsWhenIdle )
{
  Fixture f;
  Agent a( 0, Vec3( 2, 2, 40 ), f.world.rows(), f.world.columns() );
  auto s   = self_at( Vec3( 2, 2, 40 ) );
  auto out = a.decide( s, {}, f.inputs(), true );
  ASSERT_TRUE( a.knowledge().candidate_bid );
  EXPECT_EQ( a.knowledge().candidate_bid->tile, ( TileIndex{ 0, 0 } ) );
  ASSERT_EQ( out.outbound.size(), 1u );
  EXPECT_EQ( out.outbound[0].kind, MessageKind::BidAnnounce );
  EXPECT_EQ( a.knowledge().tile( { 0, 0 } ).state, TileStatus::InAuction );

  // After the auction deadline with no rivals the bid becomes a claim.
  out = a.decide( s, {}, f.inputs( 0.5 ), true );
  EXPECT_EQ( a.knowledge().current_goal, ( TileIndex{ 0, 0 } ) );
  ASSERT_EQ( out.outbound.size(), 1u );
  EXPECT_EQ( out.outbound[0].kind, MessageKind::ClaimAnnounce );
}

TEST( AgentLoop, NoDeadlockWhileTilesRemain )
{
  Fixture f;
  Agent a( 0, Vec3( 2, 2, 40 ), f.world.rows(), f.world.columns() );
  auto s = self_at( Vec3( 2, 2, 40 ) );
  auto& kb = a.knowledge();
  for( auto& t : kb.tiles )
    t.state = TileStatus::ClaimedByOther;
  kb.tiles[7].state = TileStatus::Unclaimed;
  a.decide( s, {}, f.inputs(), true );
  ASSERT_TRUE( kb.candidate_bid );
  EXPECT_EQ( kb.candidate_bid->tile, kb.tiles[7].index );
}

TEST( AgentLoop, IdleAgentHoldsPosition )
{
  Fixture f;
  Agent a( 0, Vec3( 2, 2, 40 ), f.world.rows(), f.world.columns() );
  for( auto& t : a.knowledge().tiles )
    t.state = TileStatus::Searched;
  auto s = self_at( Vec3( 30, 30, 40 ) );
  a.decide( s, {}, f.inputs(), true );
  ASSERT_TRUE( a.hold_position() );
  EXPECT_EQ( *a.hold_position(), s.position );
  EXPECT_FALSE( a.knowledge().target() );
}

TEST( AgentLoop, MarkSearchedAnnouncesAndClearsGoal )
{
  Fixture f;
  Agent a( 0, Vec3( 2, 2, 40 ), f.world.rows(), f.world.columns() );
  a.knowledge().tile( { 0, 0 } ).state = TileStatus::ClaimedBySelf;
  a.knowledge().current_goal           = TileIndex{ 0, 0 };
  auto out = a.mark_searched( { 0, 0 }, 3.0, true );
  EXPECT_FALSE( a.knowledge().current_goal );
  EXPECT_TRUE( a.knowledge().tile( { 0, 0 } ).searched_by_self );
  ASSERT_EQ( out.outbound.size(), 1u );
  EXPECT_EQ( out.outbound[0].kind, MessageKind::SearchedAnnounce );
}

TEST( AgentConfig, Validation )
{
  AgentConfig c;
  EXPECT_NO_THROW( c.validate() );
  c.horizon = 0;
  EXPECT_THROW( c.validate(), ConfigError );
}
