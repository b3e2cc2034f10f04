#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "drhc/core.hpp"
#include "drhc/meshnet.hpp"

namespace drhc
{

enum class TileStatus
{
  Unclaimed,
  InAuction,
  ClaimedBySelf,
  ClaimedByOther,
  Searched
};

inline std::string_view
to_string( TileStatus s )
{
  switch( s )
  {
  case TileStatus::Unclaimed: return "Unclaimed";
  case TileStatus::InAuction: return "InAuction";
  case TileStatus::ClaimedBySelf: return "ClaimedBySelf";
  case TileStatus::ClaimedByOther: return "ClaimedByOther";
  case TileStatus::Searched: return "Searched";
  }
  return "Unknown";
}

// One agent's view of a tile's auction. For claimed tiles, best_known_* is
// the claim holder and the value it won with.
struct TileBelief
{
  TileIndex             index;
  TileStatus            state             = TileStatus::Unclaimed;
  double                best_known_bid    = -std::numeric_limits<double>::infinity();
  AgentId               best_known_bidder = kNoAgent;
  double                auction_deadline  = 0.0;
  std::optional<double> own_bid;
  bool                  searched_by_self  = false;
};

struct BidWeights
{
  double w_dist = 1.0;
  double w_near = 0.3;
};

// Higher is better: nearness to self, plus distance of the closest other
// agent from the tile (1 when nobody else is known).
inline double
score_tile( const Vec3& self_position, const Vec3& tile_center, std::span<const Vec3> believed_others,
            const BidWeights& weights, double d_max )
{
  const double nearness = 1.0 - ( self_position - tile_center ).norm() / d_max;
  double lambda = 1.0;
  if( !believed_others.empty() )
  {
    double closest = std::numeric_limits<double>::infinity();
    for( const auto& o : believed_others )
      closest = std::min( closest, ( o - tile_center ).norm() );
    lambda = closest / d_max;
  }
  return weights.w_dist * nearness + weights.w_near * lambda;
}

struct BidUpdate
{
  TileBelief belief;
  Message    announce;
};

inline BidUpdate
open_or_raise( const Bid& bid, TileBelief belief, double t_auction, double now, bool propagate )
{
  if( belief.state != TileStatus::Unclaimed && belief.state != TileStatus::InAuction )
    throw std::logic_error( "open_or_raise: tile is " + std::string( to_string( belief.state ) ) );

  if( belief.state == TileStatus::Unclaimed )
  {
    belief.state            = TileStatus::InAuction;
    belief.auction_deadline = now + t_auction;
  }
  belief.own_bid = bid.value;
  if( outbids( bid.value, bid.bidder, belief.best_known_bid, belief.best_known_bidder ) )
  {
    belief.best_known_bid    = bid.value;
    belief.best_known_bidder = bid.bidder;
  }
  return { belief, make_bid_message( MessageKind::BidAnnounce, bid.bidder, now, bid, propagate ) };
}

struct ResolveResult
{
  TileBelief             belief;
  std::optional<Message> claim;
};

inline ResolveResult
resolve_deadline( TileBelief belief, AgentId self_id, double now, bool propagate )
{
  if( belief.state != TileStatus::InAuction || now < belief.auction_deadline )
    return { belief, std::nullopt };

  if( belief.best_known_bidder == self_id )
  {
    belief.state = TileStatus::ClaimedBySelf;
    Bid claim{ belief.index, belief.best_known_bid, self_id, now };
    return { belief, make_bid_message( MessageKind::ClaimAnnounce, self_id, now, claim, propagate ) };
  }
  belief.state = TileStatus::ClaimedByOther;
  return { belief, std::nullopt };
}

struct ReconcileContext
{
  AgentId self_id   = 0;
  double  now       = 0.0;
  double  t_auction = 0.5;
  bool    propagate = true;
};

struct ReconcileResult
{
  TileBelief           belief;
  std::vector<Message> outbound;
};

namespace detail
{
inline Message
own_claim_correction( const TileBelief& b, const ReconcileContext& ctx )
{
  Bid mine{ b.index, b.best_known_bid, ctx.self_id, ctx.now };
  return make_bid_message( MessageKind::Correction, ctx.self_id, ctx.now, mine, ctx.propagate );
}
} // namespace detail

// Applies one incoming bidding message to this agent's belief about the tile
// and produces any corrective traffic:
//  - a higher bid on a tile we claimed but have not searched drops our claim
//    and re-opens the auction locally;
//  - any bid or claim on a tile we searched is answered with SearchedAnnounce;
//  - a lower bid or claim on our claim is answered with a Correction;
//  - SearchedAnnounce is absorbing.
inline ReconcileResult
reconcile( const Message& incoming, TileBelief belief, const ReconcileContext& ctx )
{
  ReconcileResult out{ belief, {} };
  TileBelief& b = out.belief;

  if( incoming.kind == MessageKind::SearchedAnnounce )
  {
    b.state = TileStatus::Searched;
    return out;
  }
  if( incoming.kind == MessageKind::PositionUpdate )
    return out;

  const Bid& bid = std::get<Bid>( incoming.payload );
  if( bid.bidder == ctx.self_id )
    return out;

  const bool higher = outbids( bid.value, bid.bidder, b.best_known_bid, b.best_known_bidder );
  const bool is_claim = incoming.kind == MessageKind::ClaimAnnounce || incoming.kind == MessageKind::Correction;

  switch( b.state )
  {
  case TileStatus::Searched:
    if( b.searched_by_self )
      out.outbound.push_back( make_searched_message( ctx.self_id, ctx.now, b.index, ctx.propagate ) );
    break;

  case TileStatus::ClaimedBySelf:
    if( higher )
    {
      b.best_known_bid    = bid.value;
      b.best_known_bidder = bid.bidder;
      if( is_claim )
        b.state = TileStatus::ClaimedByOther;
      else
      {
        b.state            = TileStatus::InAuction;
        b.auction_deadline = ctx.now + ctx.t_auction;
      }
    }
    else
      out.outbound.push_back( detail::own_claim_correction( b, ctx ) );
    break;

  case TileStatus::InAuction:
    if( higher )
    {
      b.best_known_bid    = bid.value;
      b.best_known_bidder = bid.bidder;
      if( is_claim )
        b.state = TileStatus::ClaimedByOther;
    }
    else if( is_claim && b.best_known_bidder == ctx.self_id )
      out.outbound.push_back( detail::own_claim_correction( b, ctx ) );
    break;

  case TileStatus::Unclaimed:
    b.best_known_bid    = bid.value;
    b.best_known_bidder = bid.bidder;
    if( is_claim )
      b.state = TileStatus::ClaimedByOther;
    else
    {
      b.state            = TileStatus::InAuction;
      b.auction_deadline = bid.placed_at + ctx.t_auction;
    }
    break;

  case TileStatus::ClaimedByOther:
    if( higher )
    {
      b.best_known_bid    = bid.value;
      b.best_known_bidder = bid.bidder;
    }
    break;
  }
  return out;
}

} // namespace drhc
