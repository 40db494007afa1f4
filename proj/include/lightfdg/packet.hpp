#pragma once

// TCP header abstraction consumed by the detectors, plus the packet-event
// trace CSV:
//
//   ts_ns,src,sport,dst,dport,flags,seq,ack,len
//
// with IPv4 dotted-quad addresses and flags in {SYN,SYNACK,ACK,FIN,RST,DATA}.

#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "lightfdg/errors.hpp"

namespace lightfdg {

using Ipv4 = std::uint32_t;

inline std::string format_ipv4(Ipv4 a) {
  return std::to_string(a >> 24) + '.' + std::to_string((a >> 16) & 0xff) + '.' + std::to_string((a >> 8) & 0xff) +
         '.' + std::to_string(a & 0xff);
}

inline bool parse_ipv4(std::string_view s, Ipv4& out) {
  Ipv4 value = 0;
  for (int octet = 0; octet < 4; ++octet) {
    unsigned part = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), part);
    if (ec != std::errc{} || part > 255 || p == s.data()) return false;
    value = (value << 8) | part;
    s.remove_prefix(static_cast<std::size_t>(p - s.data()));
    if (octet < 3) {
      if (s.empty() || s.front() != '.') return false;
      s.remove_prefix(1);
    }
  }
  if (!s.empty()) return false;
  out = value;
  return true;
}

struct FlowKey {
  Ipv4 src = 0;
  Ipv4 dst = 0;
  std::uint16_t sport = 0;
  std::uint16_t dport = 0;
  std::uint8_t proto = 6;

  FlowKey reversed() const { return {dst, src, dport, sport, proto}; }

  // /24 of the sender; servers of one rack share a subnet.
  std::uint32_t subnet() const noexcept { return src >> 8; }

  std::string to_string() const {
    return format_ipv4(src) + ':' + std::to_string(sport) + "->" + format_ipv4(dst) + ':' + std::to_string(dport);
  }

  friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
  friend bool operator==(const FlowKey&, const FlowKey&) = default;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(k.src) << 32) | k.dst;
    h ^= (static_cast<std::uint64_t>(k.sport) << 24) ^ (static_cast<std::uint64_t>(k.dport) << 8) ^ k.proto;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

enum class TcpFlags : std::uint8_t { Syn, SynAck, Ack, Fin, Rst, Data };

inline std::string_view to_string(TcpFlags f) {
  switch (f) {
    case TcpFlags::Syn: return "SYN";
    case TcpFlags::SynAck: return "SYNACK";
    case TcpFlags::Ack: return "ACK";
    case TcpFlags::Fin: return "FIN";
    case TcpFlags::Rst: return "RST";
    case TcpFlags::Data: return "DATA";
  }
  return "?";
}

inline bool parse_flags(std::string_view s, TcpFlags& out) {
  static constexpr std::pair<std::string_view, TcpFlags> table[] = {
      {"SYN", TcpFlags::Syn}, {"SYNACK", TcpFlags::SynAck}, {"ACK", TcpFlags::Ack},
      {"FIN", TcpFlags::Fin}, {"RST", TcpFlags::Rst},       {"DATA", TcpFlags::Data}};
  for (const auto& [name, flag] : table) {
    if (s == name) {
      out = flag;
      return true;
    }
  }
  return false;
}

inline bool is_handshake_or_teardown(TcpFlags f) {
  return f == TcpFlags::Syn || f == TcpFlags::SynAck || f == TcpFlags::Fin || f == TcpFlags::Rst;
}

struct PacketEvent {
  std::int64_t ts_ns = 0;
  FlowKey key;  // direction of this packet
  TcpFlags flags = TcpFlags::Data;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint32_t len = 0;
  std::uint32_t observer = 0;

  friend bool operator==(const PacketEvent&, const PacketEvent&) = default;
};

class TraceFormatError : public ConfigError {
 public:
  TraceFormatError(std::size_t row, const std::string& what)
      : ConfigError("trace row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

inline constexpr std::string_view kTraceHeader = "ts_ns,src,sport,dst,dport,flags,seq,ack,len";

inline void write_trace_header(std::ostream& os) { os << kTraceHeader << '\n'; }

inline void write_trace_row(std::ostream& os, const PacketEvent& e) {
  os << e.ts_ns << ',' << format_ipv4(e.key.src) << ',' << e.key.sport << ',' << format_ipv4(e.key.dst) << ','
     << e.key.dport << ',' << to_string(e.flags) << ',' << e.seq << ',' << e.ack << ',' << e.len << '\n';
}

namespace detail {

template <class T>
bool parse_number(std::string_view s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

// Parses one data row; `row` is the 1-based line number used in errors.
inline PacketEvent parse_trace_row(std::string_view line, std::size_t row) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto f = detail::split_csv(line);
  if (f.size() != 9) throw TraceFormatError(row, "expected 9 fields, got " + std::to_string(f.size()));
  PacketEvent e;
  std::uint32_t sport = 0;
  std::uint32_t dport = 0;
  if (!detail::parse_number(f[0], e.ts_ns)) throw TraceFormatError(row, "bad ts_ns '" + std::string(f[0]) + "'");
  if (!parse_ipv4(f[1], e.key.src)) throw TraceFormatError(row, "bad src '" + std::string(f[1]) + "'");
  if (!detail::parse_number(f[2], sport) || sport > 65535) throw TraceFormatError(row, "bad sport");
  if (!parse_ipv4(f[3], e.key.dst)) throw TraceFormatError(row, "bad dst '" + std::string(f[3]) + "'");
  if (!detail::parse_number(f[4], dport) || dport > 65535) throw TraceFormatError(row, "bad dport");
  if (!parse_flags(f[5], e.flags)) throw TraceFormatError(row, "bad flags '" + std::string(f[5]) + "'");
  if (!detail::parse_number(f[6], e.seq)) throw TraceFormatError(row, "bad seq");
  if (!detail::parse_number(f[7], e.ack)) throw TraceFormatError(row, "bad ack");
  if (!detail::parse_number(f[8], e.len)) throw TraceFormatError(row, "bad len");
  if (e.flags == TcpFlags::Syn && e.len != 0) throw TraceFormatError(row, "SYN carries payload");
  e.key.sport = static_cast<std::uint16_t>(sport);
  e.key.dport = static_cast<std::uint16_t>(dport);
  e.observer = e.key.src >> 8;
  return e;
}

inline std::vector<PacketEvent> read_trace(std::istream& is) {
  std::vector<PacketEvent> out;
  std::string line;
  std::size_t row = 0;
  if (!std::getline(is, line)) return out;
  ++row;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw TraceFormatError(row, "header must be '" + std::string(kTraceHeader) + "'");
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    out.push_back(parse_trace_row(line, row));
  }
  return out;
}

}  // namespace lightfdg
