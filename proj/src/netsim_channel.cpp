#include <algorithm>
#include <cmath>

#include "coopsim/error.hpp"
#include "coopsim/netsim.hpp"

namespace coopsim {

void ChannelConfig::validate() const {
  if (!(loss_probability >= 0.0 && loss_probability <= 1.0)) {
    throw InvalidArgument("loss_probability must lie in [0, 1]");
  }
  if (!(latency_mean >= 0.0) || !(latency_jitter >= 0.0)) {
    throw InvalidArgument("channel latencies must be non-negative");
  }
}

Channel::Channel(ChannelConfig config, std::uint64_t seed) : config_(config), rng_(seed) {
  config_.validate();
}

void Channel::register_node(NodeId node) {
  if (node == kBroadcast) throw InvalidArgument("broadcast address cannot be registered");
  if (std::find(nodes_.begin(), nodes_.end(), node) == nodes_.end()) nodes_.push_back(node);
}

// 53 random bits; avoids the implementation-defined std::uniform_real_distribution.
double Channel::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

void Channel::send(NodeId src, NodeId dst, const Message& msg, double now) {
  std::vector<std::uint8_t> bytes = encode_binary(msg);
  stats_.bytes_by_sender[src] += bytes.size();

  auto enqueue = [&](NodeId to) {
    ++stats_.sent;
    const double loss_draw = uniform();
    const double jitter_draw = uniform();
    const std::uint64_t seq = next_sequence_++;
    if (loss_draw < config_.loss_probability) {
      ++stats_.dropped;
      return;
    }
    const double latency =
        std::max(0.0, config_.latency_mean + config_.latency_jitter * (2.0 * jitter_draw - 1.0));
    queue_.push_back(Pending{src, to, now, now + latency, bytes, seq});
  };

  if (dst == kBroadcast) {
    for (NodeId node : nodes_) {
      if (node != src) enqueue(node);
    }
  } else {
    enqueue(dst);
  }
}

std::vector<Envelope> Channel::poll(double now) {
  std::vector<Pending> ready;
  auto split = std::stable_partition(queue_.begin(), queue_.end(),
                                     [now](const Pending& p) { return p.deliver_time > now; });
  ready.assign(std::make_move_iterator(split), std::make_move_iterator(queue_.end()));
  queue_.erase(split, queue_.end());
  std::sort(ready.begin(), ready.end(), [](const Pending& a, const Pending& b) {
    if (a.deliver_time != b.deliver_time) return a.deliver_time < b.deliver_time;
    return a.sequence < b.sequence;
  });

  std::vector<Envelope> out;
  out.reserve(ready.size());
  for (auto& p : ready) {
    ++stats_.delivered;
    out.push_back(Envelope{p.src, p.dst, p.send_time, p.deliver_time, decode_binary(p.bytes),
                           p.bytes.size(), p.sequence});
  }
  return out;
}

BandwidthReport bandwidth_report(std::size_t packet_bytes, double rate_hz, unsigned streams,
                                 double media_bps) {
  if (packet_bytes == 0 || !(rate_hz > 0.0) || streams == 0 || !(media_bps > 0.0)) {
    throw InvalidArgument("bandwidth inputs must be positive");
  }
  BandwidthReport r;
  r.packet_bytes = packet_bytes;
  r.rate_hz = rate_hz;
  r.streams = streams;
  r.media_bps = media_bps;
  r.per_stream_bps = static_cast<double>(packet_bytes) * 8.0 * rate_hz;
  r.per_car_bps = r.per_stream_bps * streams;
  r.capacity_cars = static_cast<unsigned>(std::floor(media_bps / r.per_car_bps));
  return r;
}

}  // namespace coopsim
