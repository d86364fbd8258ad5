#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "coopsim/error.hpp"
#include "coopsim/netsim.hpp"
#include "json.hpp"

namespace coopsim {

using nlohmann::json;

const char* to_string(CoordinationMode mode) {
  switch (mode) {
    case CoordinationMode::kAuto: return "auto";
    case CoordinationMode::kCSlow: return "c_slow";
    case CoordinationMode::kCFast: return "c_fast";
  }
  return "unknown";
}

CoordinationMode coordination_mode_from_string(const std::string& s) {
  if (s == "auto") return CoordinationMode::kAuto;
  if (s == "c_slow") return CoordinationMode::kCSlow;
  if (s == "c_fast") return CoordinationMode::kCFast;
  throw InvalidArgument("unknown coordination mode '" + s + "'");
}

const char* to_string(MessageType type) {
  switch (type) {
    case MessageType::kFuturePath: return "future_path";
    case MessageType::kAutonomousPath: return "autonomous_path";
    case MessageType::kCoordinatedPath: return "coordinated_path";
    case MessageType::kInitiation: return "initiation";
    case MessageType::kTermination: return "termination";
  }
  return "unknown";
}

MessageType message_type(const Message& msg) {
  return static_cast<MessageType>(msg.index() + 1);
}

VehicleId message_vehicle(const Message& msg) {
  struct Visitor {
    VehicleId operator()(const FuturePathMsg& m) const { return m.path.vehicle_id; }
    VehicleId operator()(const AutonomousPathMsg& m) const { return m.vehicle_id; }
    VehicleId operator()(const CoordinatedPathMsg& m) const { return m.vehicle_id; }
    VehicleId operator()(const InitiationMsg& m) const { return m.vehicle_id; }
    VehicleId operator()(const TerminationMsg& m) const { return m.vehicle_id; }
  };
  return std::visit(Visitor{}, msg);
}

// ---- JSON -----------------------------------------------------------------

namespace {

constexpr int kJsonIndent = 4;

json point_json(Point2D p) { return {{"x_m", p.x}, {"y_m", p.y}}; }

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw CodecError(std::string("non-finite value in ") + what);
}

json trajectory_json(const Trajectory& traj) {
  json pts = json::array();
  for (const auto& p : traj.points) {
    require_finite(p.pos.x, "trajectory position");
    require_finite(p.pos.y, "trajectory position");
    require_finite(p.speed, "trajectory speed");
    pts.push_back({{"position", point_json(p.pos)}, {"speed_mps", p.speed}});
  }
  return pts;
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) throw CodecError(std::string("expected object around '") + key + "'");
  const auto it = obj.find(key);
  if (it == obj.end()) throw CodecError(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_number()) throw CodecError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

VehicleId vehicle_id(const json& obj) {
  const json& v = field(obj, "vehicle_id");
  if (!v.is_number_unsigned()) throw CodecError("field 'vehicle_id' must be an unsigned integer");
  const auto id = v.get<std::uint64_t>();
  if (id > std::numeric_limits<VehicleId>::max()) throw CodecError("vehicle_id out of range");
  return static_cast<VehicleId>(id);
}

Point2D point_of(const json& obj, const char* key) {
  const json& p = field(obj, key);
  return {number(p, "x_m"), number(p, "y_m")};
}

const json& array_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_array()) throw CodecError(std::string("field '") + key + "' must be an array");
  return v;
}

Trajectory trajectory_of(const json& obj) {
  Trajectory traj;
  for (const auto& p : array_field(obj, "points")) {
    traj.points.push_back({point_of(p, "position"), number(p, "speed_mps")});
  }
  return traj;
}

struct JsonEncoder {
  json operator()(const FuturePathMsg& m) const {
    const FuturePath& fp = m.path;
    require_finite(fp.current_pos.x, "current position");
    require_finite(fp.current_pos.y, "current position");
    require_finite(fp.current_speed, "current speed");
    json pts = json::array();
    for (const auto& p : fp.points) {
      require_finite(p.pos.x, "future path position");
      require_finite(p.pos.y, "future path position");
      require_finite(p.t, "future path time");
      pts.push_back({{"position", point_json(p.pos)}, {"passing_time_s", p.t}});
    }
    return {{"message_type", "future_path"},
            {"vehicle_id", fp.vehicle_id},
            {"current_position", point_json(fp.current_pos)},
            {"current_speed_mps", fp.current_speed},
            {"vehicle_shape", {{"length_m", fp.shape.length}, {"width_m", fp.shape.width}}},
            {"points", std::move(pts)}};
  }
  json operator()(const AutonomousPathMsg& m) const {
    require_finite(m.t0, "generation time");
    return {{"message_type", "autonomous_path"},
            {"vehicle_id", m.vehicle_id},
            {"generated_at_s", m.t0},
            {"points", trajectory_json(m.trajectory)}};
  }
  json operator()(const CoordinatedPathMsg& m) const {
    return {{"message_type", "coordinated_path"},
            {"vehicle_id", m.vehicle_id},
            {"points", trajectory_json(m.trajectory)}};
  }
  json operator()(const InitiationMsg& m) const {
    return {{"message_type", "initiation"},
            {"vehicle_id", m.vehicle_id},
            {"target_mode", to_string(m.target_mode)}};
  }
  json operator()(const TerminationMsg& m) const {
    return {{"message_type", "termination"}, {"vehicle_id", m.vehicle_id}};
  }
};

}  // namespace

std::string encode_json(const Message& msg) {
  return std::visit(JsonEncoder{}, msg).dump(kJsonIndent) + "\n";
}

Message decode_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw CodecError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
  try {
    const json& type = field(doc, "message_type");
    if (!type.is_string()) throw CodecError("field 'message_type' must be a string");
    const std::string kind = type.get<std::string>();
    if (kind == "future_path") {
      FuturePathMsg m;
      m.path.vehicle_id = vehicle_id(doc);
      m.path.current_pos = point_of(doc, "current_position");
      m.path.current_speed = number(doc, "current_speed_mps");
      const json& shape = field(doc, "vehicle_shape");
      m.path.shape = {number(shape, "length_m"), number(shape, "width_m")};
      for (const auto& p : array_field(doc, "points")) {
        m.path.points.push_back({point_of(p, "position"), number(p, "passing_time_s")});
      }
      return m;
    }
    if (kind == "autonomous_path") {
      return AutonomousPathMsg{vehicle_id(doc), trajectory_of(doc), number(doc, "generated_at_s")};
    }
    if (kind == "coordinated_path") {
      return CoordinatedPathMsg{vehicle_id(doc), trajectory_of(doc)};
    }
    if (kind == "initiation") {
      const json& mode = field(doc, "target_mode");
      if (!mode.is_string()) throw CodecError("field 'target_mode' must be a string");
      return InitiationMsg{vehicle_id(doc), coordination_mode_from_string(mode.get<std::string>())};
    }
    if (kind == "termination") return TerminationMsg{vehicle_id(doc)};
    throw CodecError("unknown message_type '" + kind + "'");
  } catch (const InvalidArgument& e) {
    throw CodecError(e.what());
  }
}

// ---- Binary ---------------------------------------------------------------

namespace {

constexpr std::uint32_t kStoppedTime = 0xFFFFFFFFu;

class Writer {
 public:
  explicit Writer(std::size_t reserve) { buf_.reserve(reserve); }
  template <typename T>
  void put(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<std::uint8_t>(u & 0xFFu));
      if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
    }
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw CodecError(std::string("truncated buffer while reading ") + what, pos_);
    }
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u = static_cast<U>(u | (static_cast<U>(bytes_[pos_ + i]) << (8 * i)));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::size_t position() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::int32_t quantize_position(double v) {
  if (!std::isfinite(v)) throw CodecError("non-finite coordinate");
  const double q = std::round(v / kPositionResolution);
  if (q < std::numeric_limits<std::int32_t>::min() || q > std::numeric_limits<std::int32_t>::max()) {
    throw CodecError("coordinate out of fixed-point range");
  }
  return static_cast<std::int32_t>(q);
}

double position_value(std::int32_t q) { return static_cast<double>(q) / 100.0; }

std::uint16_t quantize_speed(double v) {
  if (!std::isfinite(v) || v < 0.0) throw CodecError("speed must be finite and non-negative");
  const double q = std::round(v / kSpeedResolution);
  if (q > std::numeric_limits<std::uint16_t>::max()) throw CodecError("speed out of fixed-point range");
  return static_cast<std::uint16_t>(q);
}

double speed_value(std::uint16_t q) { return static_cast<double>(q) / 100.0; }

std::uint64_t quantize_t0(double t0) {
  if (!std::isfinite(t0) || t0 < 0.0) throw CodecError("timestamp must be finite and non-negative");
  return static_cast<std::uint64_t>(std::llround(t0 * 1e6));
}

double t0_value(std::uint64_t us) { return static_cast<double>(us) / 1e6; }

std::uint32_t quantize_offset(double offset_s) {
  if (!std::isfinite(offset_s)) throw CodecError("non-finite time offset");
  const double q = std::round(offset_s * 1000.0);
  if (q < 0.0) throw CodecError("point time precedes message timestamp");
  if (q >= static_cast<double>(kStoppedTime)) throw CodecError("time offset out of range");
  return static_cast<std::uint32_t>(q);
}

void check_count(std::size_t n) {
  if (n > kMaxWirePoints) {
    throw CodecError("path has " + std::to_string(n) + " points; at most " +
                     std::to_string(kMaxWirePoints) + " fit one datagram");
  }
}

void put_header(Writer& w, MessageType type, VehicleId id, std::size_t count, std::uint64_t t0_us) {
  w.put(static_cast<std::uint8_t>(type));
  w.put(static_cast<std::uint32_t>(id));
  w.put(static_cast<std::uint16_t>(count));
  w.put(t0_us);
}

// Trajectory points carry a passing-time offset computed from the quantised
// positions and speeds, so re-encoding a decoded message reproduces it.
void put_trajectory(Writer& w, const Trajectory& traj) {
  double t = 0.0;
  bool stopped = false;
  std::int32_t px = 0;
  std::int32_t py = 0;
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    const auto& p = traj.points[k];
    const std::int32_t qx = quantize_position(p.pos.x);
    const std::int32_t qy = quantize_position(p.pos.y);
    const std::uint16_t qv = quantize_speed(p.speed);
    std::uint32_t qt = 0;
    if (k > 0) {
      const double v = speed_value(qv);
      if (stopped || !(v > kStoppedSpeed)) {
        stopped = true;
      } else {
        t += distance({position_value(px), position_value(py)}, {position_value(qx), position_value(qy)}) / v;
      }
      if (stopped) {
        qt = kStoppedTime;
      } else {
        qt = t * 1000.0 >= kStoppedTime - 1.0 ? kStoppedTime - 1 : quantize_offset(t);
      }
    }
    w.put(qx);
    w.put(qy);
    w.put(qt);
    w.put(qv);
    px = qx;
    py = qy;
  }
}

Trajectory get_trajectory(Reader& r, std::size_t count) {
  Trajectory traj;
  traj.points.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto qx = r.get<std::int32_t>("x");
    const auto qy = r.get<std::int32_t>("y");
    (void)r.get<std::uint32_t>("t");
    const auto qv = r.get<std::uint16_t>("speed");
    traj.points.push_back({{position_value(qx), position_value(qy)}, speed_value(qv)});
  }
  return traj;
}

struct BinaryEncoder {
  std::vector<std::uint8_t> operator()(const FuturePathMsg& m) const {
    const FuturePath& fp = m.path;
    check_count(fp.points.size());
    Writer w(future_path_wire_bytes(fp.points.size()));
    const std::uint64_t t0_us = fp.points.empty() ? 0 : quantize_t0(fp.points.front().t);
    const double t0 = t0_value(t0_us);
    put_header(w, MessageType::kFuturePath, fp.vehicle_id, fp.points.size(), t0_us);
    for (const auto& p : fp.points) {
      w.put(quantize_position(p.pos.x));
      w.put(quantize_position(p.pos.y));
      w.put(quantize_offset(p.t - t0));
    }
    return w.take();
  }
  std::vector<std::uint8_t> operator()(const AutonomousPathMsg& m) const {
    check_count(m.trajectory.size());
    Writer w(trajectory_wire_bytes(m.trajectory.size()));
    put_header(w, MessageType::kAutonomousPath, m.vehicle_id, m.trajectory.size(), quantize_t0(m.t0));
    put_trajectory(w, m.trajectory);
    return w.take();
  }
  std::vector<std::uint8_t> operator()(const CoordinatedPathMsg& m) const {
    check_count(m.trajectory.size());
    Writer w(trajectory_wire_bytes(m.trajectory.size()));
    put_header(w, MessageType::kCoordinatedPath, m.vehicle_id, m.trajectory.size(), 0);
    put_trajectory(w, m.trajectory);
    return w.take();
  }
  std::vector<std::uint8_t> operator()(const InitiationMsg& m) const {
    Writer w(kBinaryHeaderBytes + 1);
    put_header(w, MessageType::kInitiation, m.vehicle_id, 0, 0);
    w.put(static_cast<std::uint8_t>(m.target_mode));
    return w.take();
  }
  std::vector<std::uint8_t> operator()(const TerminationMsg& m) const {
    Writer w(kBinaryHeaderBytes);
    put_header(w, MessageType::kTermination, m.vehicle_id, 0, 0);
    return w.take();
  }
};

}  // namespace

std::size_t future_path_wire_bytes(std::size_t points) {
  return kBinaryHeaderBytes + kFuturePathPointBytes * points;
}

std::size_t trajectory_wire_bytes(std::size_t points) {
  return kBinaryHeaderBytes + kTrajectoryPointBytes * points;
}

std::size_t binary_size(const Message& msg) {
  switch (message_type(msg)) {
    case MessageType::kFuturePath:
      return future_path_wire_bytes(std::get<FuturePathMsg>(msg).path.points.size());
    case MessageType::kAutonomousPath:
      return trajectory_wire_bytes(std::get<AutonomousPathMsg>(msg).trajectory.size());
    case MessageType::kCoordinatedPath:
      return trajectory_wire_bytes(std::get<CoordinatedPathMsg>(msg).trajectory.size());
    case MessageType::kInitiation: return kBinaryHeaderBytes + 1;
    case MessageType::kTermination: return kBinaryHeaderBytes;
  }
  return 0;
}

std::vector<std::uint8_t> encode_binary(const Message& msg) { return std::visit(BinaryEncoder{}, msg); }

Message decode_binary(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto type = r.get<std::uint8_t>("msg_type");
  const auto id = r.get<std::uint32_t>("vehicle_id");
  const auto count = r.get<std::uint16_t>("point_count");
  const auto t0_us = r.get<std::uint64_t>("t0");
  if (count > kMaxWirePoints) throw CodecError("point_count exceeds datagram limit", 5);

  Message out;
  switch (static_cast<MessageType>(type)) {
    case MessageType::kFuturePath: {
      FuturePathMsg m;
      m.path.vehicle_id = id;
      const double t0 = t0_value(t0_us);
      m.path.points.reserve(count);
      for (std::size_t k = 0; k < count; ++k) {
        const auto qx = r.get<std::int32_t>("x");
        const auto qy = r.get<std::int32_t>("y");
        const auto qt = r.get<std::uint32_t>("t");
        m.path.points.push_back({{position_value(qx), position_value(qy)}, t0 + qt / 1000.0});
      }
      if (!m.path.points.empty()) m.path.current_pos = m.path.points.front().pos;
      if (m.path.points.size() > 1) {
        const auto& a = m.path.points[0];
        const auto& b = m.path.points[1];
        const double dt = b.t - a.t;
        m.path.current_speed = dt > 0.0 ? distance(a.pos, b.pos) / dt : 0.0;
      }
      out = std::move(m);
      break;
    }
    case MessageType::kAutonomousPath:
      out = AutonomousPathMsg{id, get_trajectory(r, count), t0_value(t0_us)};
      break;
    case MessageType::kCoordinatedPath:
      out = CoordinatedPathMsg{id, get_trajectory(r, count)};
      break;
    case MessageType::kInitiation: {
      if (count != 0) throw CodecError("initiation carries no points", 5);
      const auto mode = r.get<std::uint8_t>("target_mode");
      if (mode > static_cast<std::uint8_t>(CoordinationMode::kCFast)) {
        throw CodecError("invalid target_mode", r.position() - 1);
      }
      out = InitiationMsg{id, static_cast<CoordinationMode>(mode)};
      break;
    }
    case MessageType::kTermination:
      if (count != 0) throw CodecError("termination carries no points", 5);
      out = TerminationMsg{id};
      break;
    default:
      throw CodecError("unknown msg_type " + std::to_string(type), 0);
  }
  if (!r.at_end()) throw CodecError("trailing bytes after message", r.position());
  return out;
}

}  // namespace coopsim
