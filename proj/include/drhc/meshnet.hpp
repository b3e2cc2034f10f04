#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <variant>
#include <vector>

#include "drhc/core.hpp"
#include "drhc/rng.hpp"
#include "drhc/world.hpp"

namespace drhc
{

enum class MessageKind
{
  PositionUpdate,
  BidAnnounce,
  ClaimAnnounce,
  SearchedAnnounce,
  Correction
};

inline std::string_view
to_string( MessageKind kind )
{
  switch( kind )
  {
  case MessageKind::PositionUpdate: return "PositionUpdate";
  case MessageKind::BidAnnounce: return "BidAnnounce";
  case MessageKind::ClaimAnnounce: return "ClaimAnnounce";
  case MessageKind::SearchedAnnounce: return "SearchedAnnounce";
  case MessageKind::Correction: return "Correction";
  }
  return "Unknown";
}

struct PositionPayload
{
  Vec3 position     = Vec3::Zero();
  Vec3 velocity     = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
};

struct SearchedPayload
{
  TileIndex tile;
  AgentId   searcher = kNoAgent;
};

using Payload = std::variant<PositionPayload, Bid, SearchedPayload>;

// A message is identified by (sender, sequence); relays keep both and only
// bump hop_count.
struct Message
{
  MessageKind   kind      = MessageKind::PositionUpdate;
  AgentId       sender    = kNoAgent;
  std::uint64_t sequence  = 0;
  double        sent_at   = 0.0;
  Payload       payload   = PositionPayload{};
  bool          propagate = false;
  unsigned      hop_count = 0;
};

inline Message
make_position_update( AgentId sender, double now, const PositionPayload& body )
{
  return Message{ MessageKind::PositionUpdate, sender, 0, now, body, false, 0 };
}

inline Message
make_bid_message( MessageKind kind, AgentId sender, double now, const Bid& bid, bool propagate )
{
  return Message{ kind, sender, 0, now, bid, propagate, 0 };
}

inline Message
make_searched_message( AgentId sender, double now, TileIndex tile, bool propagate )
{
  return Message{ MessageKind::SearchedAnnounce, sender, 0, now, SearchedPayload{ tile, sender }, propagate, 0 };
}

struct NetworkConfig
{
  double                mean_delay       = 0.0;
  std::optional<double> delay_jitter;    // defaults to 0.25 * mean_delay
  double                drop_probability = 0.0;
  double                comm_range       = 200.0;
  unsigned              max_hops         = 16;
  bool                  propagate_bids   = true;

  double jitter() const { return delay_jitter.value_or( 0.25 * mean_delay ); }

  void validate() const
  {
    if( mean_delay < 0.0 )
      throw ConfigError( "network.mean_delay", "must be non-negative" );
    if( jitter() < 0.0 )
      throw ConfigError( "network.delay_jitter", "must be non-negative" );
    if( drop_probability < 0.0 || drop_probability > 1.0 )
      throw ConfigError( "network.drop_probability", "must lie in [0, 1]" );
    if( !( comm_range > 0.0 ) )
      throw ConfigError( "network.comm_range", "must be positive" );
  }
};

// Other alive agents within comm_range (inclusive) of `id`, in id order.
inline std::vector<AgentId>
neighbors( std::span<const AgentState> states, AgentId id, double comm_range )
{
  auto self = std::find_if( states.begin(), states.end(), [&]( const AgentState& s ) { return s.id == id; } );
  if( self == states.end() )
    throw std::out_of_range( "neighbors: unknown agent id " + std::to_string( id ) );

  std::vector<AgentId> out;
  const double r2 = comm_range * comm_range;
  for( const auto& s : states )
  {
    if( s.id == id || !s.alive )
      continue;
    if( ( s.position - self->position ).squaredNorm() <= r2 )
      out.push_back( s.id );
  }
  std::sort( out.begin(), out.end() );
  return out;
}

struct InFlightEntry
{
  double  delivery_time = 0.0;
  AgentId recipient     = kNoAgent;
  Message message;

  auto key() const { return std::tuple( delivery_time, message.sender, message.sequence, message.hop_count, recipient ); }
  friend bool operator<( const InFlightEntry& a, const InFlightEntry& b ) { return a.key() < b.key(); }
};

// Always sorted by (delivery_time, sender, sequence, hop, recipient).
using InFlightQueue = std::set<InFlightEntry>;

struct Delivery
{
  double  time = 0.0;
  AgentId recipient = kNoAgent;
  const Message* message = nullptr;
};

// Range-limited mesh with per-link latency and loss. Delivery to a recipient
// is committed when the link is scheduled; propagated messages are
// re-forwarded by each recipient at its delivery time.
class MeshNetwork
{
public:
  MeshNetwork( NetworkConfig cfg, std::uint64_t seed, std::size_t n_agents )
    : cfg_( std::move( cfg ) )
    , rng_( seed )
    , next_sequence_( n_agents, 0 )
    , seen_( n_agents )
  {}

  const NetworkConfig& config() const { return cfg_; }
  const InFlightQueue& queue() const { return queue_; }
  bool idle() const { return queue_.empty(); }
  std::uint64_t deliveries() const { return delivered_; }

  void set_trace( std::function<void( const Delivery& )> trace ) { trace_ = std::move( trace ); }

  // Stamps the sequence number and schedules one copy per current neighbor.
  // Returns the stamped message.
  Message send( Message msg, std::span<const AgentState> states, double now )
  {
    if( msg.sender >= next_sequence_.size() )
      throw std::out_of_range( "MeshNetwork::send: unknown sender" );
    msg.sequence  = next_sequence_[msg.sender]++;
    msg.hop_count = 0;
    seen_[msg.sender].insert( message_key( msg ) );
    if( !states[msg.sender].alive )
      return msg;
    schedule_from( msg.sender, msg, states, now );
    return msg;
  }

  // Removes every entry due at or before `now` and returns them grouped by
  // recipient in processing order. Duplicates of an already-delivered
  // message id are discarded.
  std::vector<std::vector<Message>> deliver_due( double now, std::span<const AgentState> states )
  {
    std::vector<std::vector<Message>> batches( seen_.size() );
    while( !queue_.empty() && queue_.begin()->delivery_time <= now )
    {
      InFlightEntry entry = std::move( queue_.extract( queue_.begin() ).value() );
      const AgentId to = entry.recipient;
      if( !seen_[to].insert( message_key( entry.message ) ).second )
        continue;
      ++delivered_;
      if( trace_ )
        trace_( Delivery{ entry.delivery_time, to, &entry.message } );
      if( entry.message.propagate && entry.message.hop_count < cfg_.max_hops && to < states.size() && states[to].alive )
      {
        Message relay = entry.message;
        relay.hop_count += 1;
        schedule_from( to, relay, states, entry.delivery_time );
      }
      batches[to].push_back( std::move( entry.message ) );
    }
    return batches;
  }

  double sample_delay()
  {
    const double j = cfg_.jitter();
    std::uniform_real_distribution<double> u( -1.0, 1.0 );
    const double draw = u( rng_ );
    return std::max( 0.0, cfg_.mean_delay + j * draw );
  }

private:
  static std::uint64_t message_key( const Message& m ) { return ( static_cast<std::uint64_t>( m.sender ) << 40 ) ^ m.sequence; }

  void schedule_from( AgentId from, const Message& msg, std::span<const AgentState> states, double at )
  {
    std::uniform_real_distribution<double> coin( 0.0, 1.0 );
    const auto key = message_key( msg );
    for( AgentId to : neighbors( states, from, cfg_.comm_range ) )
    {
      if( seen_[to].contains( key ) )
        continue;
      const double draw  = coin( rng_ );
      const double delay = sample_delay();
      if( draw < cfg_.drop_probability )
        continue;
      queue_.insert( InFlightEntry{ at + delay, to, msg } );
    }
  }

  NetworkConfig                                   cfg_;
  Rng                                             rng_;
  InFlightQueue                                   queue_;
  std::vector<std::uint64_t>                      next_sequence_;
  std::vector<std::unordered_set<std::uint64_t>>  seen_;
  std::function<void( const Delivery& )>          trace_;
  std::uint64_t                                   delivered_ = 0;
};

} // namespace drhc
