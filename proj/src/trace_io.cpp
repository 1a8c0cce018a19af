#include "cidc/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cidc {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void bad_row(const std::string& source, std::size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << source << ":" << line_no << ": " << what;
  throw std::invalid_argument(os.str());
}

std::int64_t to_i64(const std::string& s, const std::string& source, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    bad_row(source, line_no, "expected an integer, got '" + s + "'");
  }
}

double to_f64(const std::string& s, const std::string& source, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    bad_row(source, line_no, "expected a number, got '" + s + "'");
  }
}

}  // namespace

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::sent: return "sent";
    case Outcome::collided: return "collided";
    case Outcome::expired: return "expired";
  }
  return "?";
}

const char* protocol_name(Protocol p) { return p == Protocol::cidc ? "cidc" : "dcf"; }

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_slot_trace(std::ostream& os, const std::vector<SlotRow>& rows) {
  os << "slot,h,n_o,c,b_max\n";
  for (const SlotRow& r : rows)
    os << r.slot << ',' << int(r.h) << ',' << r.n_o << ',' << r.c << ',' << r.b_max << '\n';
}

std::vector<SlotRow> read_slot_trace(std::istream& is, const std::string& source_name) {
  std::string line;
  if (!std::getline(is, line) || split_csv(line) != std::vector<std::string>{"slot", "h", "n_o", "c", "b_max"})
    bad_row(source_name, 1, "bad slot trace header");
  std::vector<SlotRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) bad_row(source_name, line_no, "expected 5 fields");
    SlotRow r;
    r.slot = to_i64(f[0], source_name, line_no);
    r.h = static_cast<std::uint8_t>(to_i64(f[1], source_name, line_no));
    r.n_o = static_cast<std::int32_t>(to_i64(f[2], source_name, line_no));
    r.c = static_cast<std::int32_t>(to_i64(f[3], source_name, line_no));
    r.b_max = static_cast<std::int32_t>(to_i64(f[4], source_name, line_no));
    rows.push_back(r);
  }
  return rows;
}

void write_packets(std::ostream& os, Protocol proto, const std::vector<PacketRecord>& packets) {
  os << "protocol,vehicle,gen_mini,entry,outcome,start_mini,d_o_us,d_c_us\n";
  const char* pname = protocol_name(proto);
  for (const PacketRecord& pk : packets) {
    os << pname << ',' << pk.vehicle << ',' << pk.gen_mini << ',' << pk.entry << ','
       << outcome_name(pk.outcome) << ',';
    if (pk.outcome == Outcome::expired) {
      os << ",,";
    } else {
      os << pk.start_tx << ',' << format_float(pk.d_o * 1e6) << ',' << format_float(pk.d_c * 1e6);
    }
    os << '\n';
  }
}

PacketFile read_packets(std::istream& is, const std::string& source_name) {
  std::string line;
  if (!std::getline(is, line) ||
      split_csv(line) != std::vector<std::string>{"protocol", "vehicle", "gen_mini", "entry",
                                                  "outcome", "start_mini", "d_o_us", "d_c_us"})
    bad_row(source_name, 1, "bad packet file header");
  PacketFile out;
  bool proto_seen = false;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 8) bad_row(source_name, line_no, "expected 8 fields");
    Protocol proto;
    if (f[0] == "cidc") proto = Protocol::cidc;
    else if (f[0] == "dcf") proto = Protocol::dcf;
    else bad_row(source_name, line_no, "unknown protocol '" + f[0] + "'");
    if (proto_seen && proto != out.proto) bad_row(source_name, line_no, "mixed protocols");
    out.proto = proto;
    proto_seen = true;
    PacketRecord pk;
    pk.vehicle = static_cast<int>(to_i64(f[1], source_name, line_no));
    pk.gen_mini = to_i64(f[2], source_name, line_no);
    pk.entry = static_cast<int>(to_i64(f[3], source_name, line_no));
    if (f[4] == "sent") pk.outcome = Outcome::sent;
    else if (f[4] == "collided") pk.outcome = Outcome::collided;
    else if (f[4] == "expired") pk.outcome = Outcome::expired;
    else bad_row(source_name, line_no, "unknown outcome '" + f[4] + "'");
    if (pk.outcome == Outcome::expired) {
      if (!f[5].empty() || !f[6].empty() || !f[7].empty())
        bad_row(source_name, line_no, "expired packet with service fields");
      pk.start_tx = -1;
    } else {
      pk.start_tx = to_i64(f[5], source_name, line_no);
      pk.d_o = to_f64(f[6], source_name, line_no) * 1e-6;
      pk.d_c = to_f64(f[7], source_name, line_no) * 1e-6;
    }
    out.packets.push_back(pk);
  }
  return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

}  // namespace

void write_slot_trace_file(const std::string& path, const std::vector<SlotRow>& rows) {
  auto os = open_out(path);
  write_slot_trace(os, rows);
}

void write_packets_file(const std::string& path, Protocol proto,
                        const std::vector<PacketRecord>& packets) {
  auto os = open_out(path);
  write_packets(os, proto, packets);
}

std::vector<SlotRow> read_slot_trace_file(const std::string& path) {
  auto is = open_in(path);
  return read_slot_trace(is, path);
}

PacketFile read_packets_file(const std::string& path) {
  auto is = open_in(path);
  return read_packets(is, path);
}

}  // namespace cidc
