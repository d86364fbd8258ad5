#pragma once

// Message set exchanged between vehicles and the roadside unit, its JSON and
// binary encodings, a simulated broadcast/unicast channel and bandwidth
// arithmetic.

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coopsim/path_model.hpp"

namespace coopsim {

enum class CoordinationMode : std::uint8_t { kAuto = 0, kCSlow = 1, kCFast = 2 };

const char* to_string(CoordinationMode mode);
CoordinationMode coordination_mode_from_string(const std::string& s);

struct FuturePathMsg {
  FuturePath path;
  friend bool operator==(const FuturePathMsg&, const FuturePathMsg&) = default;
};

struct AutonomousPathMsg {
  VehicleId vehicle_id = 0;
  Trajectory trajectory;
  double t0 = 0.0;
  friend bool operator==(const AutonomousPathMsg&, const AutonomousPathMsg&) = default;
};

struct CoordinatedPathMsg {
  VehicleId vehicle_id = 0;
  Trajectory trajectory;
  friend bool operator==(const CoordinatedPathMsg&, const CoordinatedPathMsg&) = default;
};

struct InitiationMsg {
  VehicleId vehicle_id = 0;
  CoordinationMode target_mode = CoordinationMode::kCSlow;
  friend bool operator==(const InitiationMsg&, const InitiationMsg&) = default;
};

struct TerminationMsg {
  VehicleId vehicle_id = 0;
  friend bool operator==(const TerminationMsg&, const TerminationMsg&) = default;
};

using Message =
    std::variant<FuturePathMsg, AutonomousPathMsg, CoordinatedPathMsg, InitiationMsg, TerminationMsg>;

// Wire tag (first byte of the binary form).
enum class MessageType : std::uint8_t {
  kFuturePath = 1,
  kAutonomousPath = 2,
  kCoordinatedPath = 3,
  kInitiation = 4,
  kTermination = 5,
};

MessageType message_type(const Message& msg);
VehicleId message_vehicle(const Message& msg);
const char* to_string(MessageType type);

// ---- JSON -----------------------------------------------------------------

// Self-describing text form; doubles are written with round-trip precision
// so decode_json(encode_json(m)) == m.
std::string encode_json(const Message& msg);
// Throws CodecError (with the byte position for syntax errors).
Message decode_json(std::string_view text);

// ---- Binary ---------------------------------------------------------------
//
// Little-endian layout:
//   u8  msg_type
//   u32 vehicle_id
//   u16 point_count
//   u64 t0                 microseconds (0 for messages without a timestamp)
// future path point:        i32 x, i32 y (0.01 m), u32 t (ms after t0)
// trajectory point:         i32 x, i32 y (0.01 m), u32 t (ms, cumulative
//                           constant-speed passing time from the first
//                           point; 0xFFFFFFFF past a stopped segment),
//                           u16 speed (0.01 m/s)
// initiation:               header followed by u8 target_mode
//
// A future path travels as id, t0 and points only: on decode current_pos is
// the first point, current_speed the implied speed of the first segment and
// shape the default shape.

inline constexpr std::size_t kBinaryHeaderBytes = 15;
inline constexpr std::size_t kFuturePathPointBytes = 12;
inline constexpr std::size_t kTrajectoryPointBytes = 14;
inline constexpr std::size_t kMaxUdpPayload = 1460;
inline constexpr double kPositionResolution = 0.01;  // m
inline constexpr double kTimeResolution = 0.001;     // s
inline constexpr double kSpeedResolution = 0.01;     // m/s

std::vector<std::uint8_t> encode_binary(const Message& msg);
Message decode_binary(std::span<const std::uint8_t> bytes);

std::size_t future_path_wire_bytes(std::size_t points);
std::size_t trajectory_wire_bytes(std::size_t points);
std::size_t binary_size(const Message& msg);

// ---- Channel --------------------------------------------------------------

using NodeId = std::uint32_t;
inline constexpr NodeId kRsuNode = 0;
inline constexpr NodeId kBroadcast = 0xFFFFFFFFu;

struct ChannelConfig {
  double latency_mean = 0.01;
  double latency_jitter = 0.005;
  double loss_probability = 0.0;
  std::uint64_t seed = 1;
  friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
  void validate() const;
};

struct Envelope {
  NodeId src = 0;
  NodeId dst = 0;
  double send_time = 0.0;
  double deliver_time = 0.0;
  Message payload;
  std::size_t wire_bytes = 0;
  std::uint64_t sequence = 0;
};

struct ChannelStats {
  std::uint64_t sent = 0;       // envelopes after broadcast fan-out
  std::uint64_t dropped = 0;
  std::uint64_t delivered = 0;
  std::map<NodeId, std::uint64_t> bytes_by_sender;  // one count per transmission
};

// Single event queue. Payloads travel in their binary encoding, so receivers
// see quantised values exactly as a real link would deliver them.
class Channel {
 public:
  Channel(ChannelConfig config, std::uint64_t seed);

  void register_node(NodeId node);
  const std::vector<NodeId>& nodes() const { return nodes_; }

  // dst == kBroadcast fans out to every registered node except src.
  void send(NodeId src, NodeId dst, const Message& msg, double now);
  // Envelopes with deliver_time <= now, in (deliver_time, sequence) order.
  std::vector<Envelope> poll(double now);

  std::size_t in_flight() const { return queue_.size(); }
  const ChannelStats& stats() const { return stats_; }

 private:
  struct Pending {
    NodeId src, dst;
    double send_time, deliver_time;
    std::vector<std::uint8_t> bytes;
    std::uint64_t sequence;
  };

  double uniform();

  ChannelConfig config_;
  std::mt19937_64 rng_;
  std::vector<NodeId> nodes_;
  std::vector<Pending> queue_;
  std::uint64_t next_sequence_ = 0;
  ChannelStats stats_;
};

// ---- Bandwidth ------------------------------------------------------------

struct BandwidthReport {
  std::size_t packet_bytes = 0;
  double rate_hz = 0.0;
  unsigned streams = 0;
  double media_bps = 0.0;
  double per_stream_bps = 0.0;
  double per_car_bps = 0.0;
  unsigned capacity_cars = 0;
};

// bps = bytes * 8 * rate; per car = per stream * streams;
// capacity = floor(media / per car). Kilo means 1000 throughout.
BandwidthReport bandwidth_report(std::size_t packet_bytes, double rate_hz, unsigned streams,
                                 double media_bps);

}  // namespace coopsim
