#include <gtest/gtest.h>

#include <random>

#include "drhc/bidding.hpp"

using namespace drhc;

namespace
{

const BidWeights kWeights{ 1.0, 0.3 };

Message
incoming( MessageKind kind, AgentId bidder, double value, TileIndex tile = { 0, 0 }, double at = 0.0 )
{
  if( kind == MessageKind::SearchedAnnounce )
    return make_searched_message( bidder, at, tile, true );
  return make_bid_message( kind, bidder, at, Bid{ tile, value, bidder, at }, true );
}

TileBelief
claimed_by_self( AgentId self, double value )
{
  TileBelief b;
  b.state             = TileStatus::ClaimedBySelf;
  b.best_known_bid    = value;
  b.best_known_bidder = self;
  b.own_bid           = value;
  return b;
}

} // namespace

TEST( ScoreTile, AtCenterNoOthers )
{
  const Vec3 c( 12.5, 12.5, 40 );
  EXPECT_NEAR( score_tile( c, c, {}, kWeights, 721.0 ), 1.3, 1e-12 );
}

TEST( ScoreTile, WorstCase )
{
  const Vec3 c( 0, 0, 40 );
  std::vector<Vec3> others{ c };
  EXPECT_NEAR( score_tile( c + Vec3( 721, 0, 0 ), c, others, kWeights, 721.0 ), 0.0, 1e-12 );
}

TEST( ScoreTile, HandEvaluation )
{
  const Vec3 c( 0, 0, 40 );
  std::vector<Vec3> others{ c + Vec3( 0, 400, 0 ), c + Vec3( 0, -600, 0 ) };
  const double g = score_tile( c + Vec3( 100, 0, 0 ), c, others, kWeights, 721.0 );
  EXPECT_NEAR( g, 1.0 * ( 1 - 100.0 / 721 ) + 0.3 * ( 400.0 / 721 ), 1e-12 );
  EXPECT_NEAR( g, 1.028, 5e-4 );
}

TEST( OpenOrRaise, OpensAuction )
{
  TileBelief b;
  auto u = open_or_raise( Bid{ { 0, 0 }, 0.4, 3, 2.0 }, b, 0.5, 2.0, true );
  EXPECT_EQ( u.belief.state, TileStatus::InAuction );
  EXPECT_DOUBLE_EQ( u.belief.auction_deadline, 2.5 );
  EXPECT_EQ( u.belief.best_known_bidder, 3u );
  EXPECT_EQ( u.announce.kind, MessageKind::BidAnnounce );
  EXPECT_TRUE( u.announce.propagate );
  EXPECT_FALSE( open_or_raise( Bid{ { 0, 0 }, 0.4, 3, 2.0 }, b, 0.5, 2.0, false ).announce.propagate );
}

TEST( OpenOrRaise, LowerOwnBidLeavesBest )
{
  TileBelief b;
  b.state             = TileStatus::InAuction;
  b.best_known_bid    = 0.9;
  b.best_known_bidder = 1;
  b.auction_deadline  = 3.0;
  auto u = open_or_raise( Bid{ { 0, 0 }, 0.8, 2, 2.9 }, b, 0.5, 2.9, true );
  EXPECT_EQ( u.belief.best_known_bid, 0.9 );
  EXPECT_EQ( u.belief.best_known_bidder, 1u );
  EXPECT_EQ( u.belief.auction_deadline, 3.0 );
  EXPECT_EQ( u.belief.own_bid, 0.8 );
}

TEST( OpenOrRaise, TieGoesToHigherId )
{
  TileBelief b;
  b = open_or_raise( Bid{ { 0, 0 }, 0.7, 2, 0 }, b, 0.5, 0, true ).belief;
  b = open_or_raise( Bid{ { 0, 0 }, 0.7, 5, 0 }, b, 0.5, 0, true ).belief;
  EXPECT_EQ( b.best_known_bidder, 5u );
  b = open_or_raise( Bid{ { 0, 0 }, 0.7, 2, 0 }, b, 0.5, 0, true ).belief;
  EXPECT_EQ( b.best_known_bidder, 5u );
}

TEST( OpenOrRaise, RejectsClaimedOrSearched )
{
  TileBelief b;
  b.state = TileStatus::Searched;
  EXPECT_THROW( open_or_raise( Bid{}, b, 0.5, 0, true ), std::logic_error );
  b.state = TileStatus::ClaimedByOther;
  EXPECT_THROW( open_or_raise( Bid{}, b, 0.5, 0, true ), std::logic_error );
}

TEST( ResolveDeadline, SoleBidderClaims )
{
  TileBelief fresh;
  fresh.index  = { 1, 2 };
  TileBelief b = open_or_raise( Bid{ { 1, 2 }, 0.6, 4, 1.0 }, fresh, 0.5, 1.0, true ).belief;
  auto r = resolve_deadline( b, 4, 1.5, true );
  EXPECT_EQ( r.belief.state, TileStatus::ClaimedBySelf );
  ASSERT_TRUE( r.claim );
  EXPECT_EQ( r.claim->kind, MessageKind::ClaimAnnounce );
  EXPECT_EQ( std::get<Bid>( r.claim->payload ).tile, ( TileIndex{ 1, 2 } ) );
}

TEST( ResolveDeadline, LoserGivesUp )
{
  TileBelief b = open_or_raise( Bid{ { 0, 0 }, 0.6, 4, 1.0 }, TileBelief{}, 0.5, 1.0, true ).belief;
  b.best_known_bid    = 0.9;
  b.best_known_bidder = 1;
  auto r = resolve_deadline( b, 4, 1.5, true );
  EXPECT_EQ( r.belief.state, TileStatus::ClaimedByOther );
  EXPECT_FALSE( r.claim );
}

TEST( ResolveDeadline, BeforeDeadlineIsNoop )
{
  TileBelief b = open_or_raise( Bid{ { 0, 0 }, 0.6, 4, 1.0 }, TileBelief{}, 0.5, 1.0, true ).belief;
  auto r = resolve_deadline( b, 4, 1.45, true );
  EXPECT_EQ( r.belief.state, TileStatus::InAuction );
  EXPECT_FALSE( r.claim );
}

TEST( Reconcile, HigherBidDropsUnsearchedClaim )
{
  const ReconcileContext ctx{ 2, 4.0, 0.5, true };
  auto r = reconcile( incoming( MessageKind::BidAnnounce, 7, 0.95 ), claimed_by_self( 2, 0.5 ), ctx );
  EXPECT_EQ( r.belief.state, TileStatus::InAuction );
  EXPECT_DOUBLE_EQ( r.belief.auction_deadline, 4.5 );
  EXPECT_EQ( r.belief.best_known_bidder, 7u );
  EXPECT_TRUE( r.outbound.empty() );
}

TEST( Reconcile, ClaimOnSearchedTileIsCorrected )
{
  TileBelief b;
  b.state            = TileStatus::Searched;
  b.searched_by_self = true;
  b.index            = { 3, 1 };
  auto r = reconcile( incoming( MessageKind::ClaimAnnounce, 7, 0.95, { 3, 1 } ), b, ReconcileContext{ 2, 4.0, 0.5, true } );
  EXPECT_EQ( r.belief.state, TileStatus::Searched );
  ASSERT_EQ( r.outbound.size(), 1u );
  EXPECT_EQ( r.outbound[0].kind, MessageKind::SearchedAnnounce );
  EXPECT_EQ( std::get<SearchedPayload>( r.outbound[0].payload ).tile, ( TileIndex{ 3, 1 } ) );
}

TEST( Reconcile, SearchedAnnounceOnUnclaimed )
{
  auto r = reconcile( incoming( MessageKind::SearchedAnnounce, 7, 0 ), TileBelief{}, ReconcileContext{} );
  EXPECT_EQ( r.belief.state, TileStatus::Searched );
  EXPECT_TRUE( r.outbound.empty() );
}

TEST( Reconcile, LowerBidOnOwnClaimGetsCorrection )
{
  auto r = reconcile( incoming( MessageKind::BidAnnounce, 7, 0.2 ), claimed_by_self( 2, 0.5 ), ReconcileContext{ 2, 1.0, 0.5, true } );
  EXPECT_EQ( r.belief.state, TileStatus::ClaimedBySelf );
  ASSERT_EQ( r.outbound.size(), 1u );
  EXPECT_EQ( r.outbound[0].kind, MessageKind::Correction );
  const auto& bid = std::get<Bid>( r.outbound[0].payload );
  EXPECT_EQ( bid.bidder, 2u );
  EXPECT_EQ( bid.value, 0.5 );
}

TEST( Reconcile, HigherClaimOnOwnClaimYields )
{
  auto r = reconcile( incoming( MessageKind::ClaimAnnounce, 7, 0.9 ), claimed_by_self( 2, 0.5 ), ReconcileContext{ 2, 1.0, 0.5, true } );
  EXPECT_EQ( r.belief.state, TileStatus::ClaimedByOther );
}

TEST( Reconcile, BidOnUnclaimedOpensAuctionFromPlacement )
{
  auto r = reconcile( incoming( MessageKind::BidAnnounce, 7, 0.3, { 0, 0 }, 1.0 ), TileBelief{}, ReconcileContext{ 2, 1.2, 0.5, true } );
  EXPECT_EQ( r.belief.state, TileStatus::InAuction );
  EXPECT_DOUBLE_EQ( r.belief.auction_deadline, 1.5 );
}

TEST( Reconcile, SearchedIsAbsorbing )
{
  std::mt19937_64 rng( 4 );
  const MessageKind kinds[] = { MessageKind::BidAnnounce, MessageKind::ClaimAnnounce, MessageKind::Correction,
                                MessageKind::SearchedAnnounce };
  TileBelief b;
  b.state = TileStatus::Searched;
  for( int i = 0; i < 1000; ++i )
  {
    const auto kind = kinds[rng() % 4];
    b = reconcile( incoming( kind, AgentId( rng() % 9 ), double( rng() % 100 ) / 10 ), b,
                   ReconcileContext{ 0, double( i ), 0.5, true } )
          .belief;
    ASSERT_EQ( b.state, TileStatus::Searched );
  }
}

TEST( Outbids, TotalOrder )
{
  std::mt19937_64 rng( 8 );
  for( int i = 0; i < 5000; ++i )
  {
    const double va = double( rng() % 4 ), vb = double( rng() % 4 ), vc = double( rng() % 4 );
    const AgentId a = AgentId( rng() % 5 ), b = AgentId( rng() % 5 ), c = AgentId( rng() % 5 );
    const bool ab = outbids( va, a, vb, b ), ba = outbids( vb, b, va, a );
    if( va == vb && a == b )
    {
      ASSERT_FALSE( ab || ba );
    }
    else
    {
      ASSERT_NE( ab, ba );
    }
    if( ab && outbids( vb, b, vc, c ) )
    {
      ASSERT_TRUE( outbids( va, a, vc, c ) );
    }
  }
  EXPECT_TRUE( outbids( -1.0, 0, -std::numeric_limits<double>::infinity(), kNoAgent ) );
}
