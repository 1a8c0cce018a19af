#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cidc/engine.hpp"

namespace cidc {

/// Slot trace CSV: header slot,h,n_o,c,b_max then one row per slot.
void write_slot_trace(std::ostream& os, const std::vector<SlotRow>& rows);
std::vector<SlotRow> read_slot_trace(std::istream& is, const std::string& source_name);

/// Packet CSV: header
/// protocol,vehicle,gen_mini,entry,outcome,start_mini,d_o_us,d_c_us.
/// Expired packets carry empty start and delay fields.
void write_packets(std::ostream& os, Protocol proto, const std::vector<PacketRecord>& packets);

struct PacketFile {
  Protocol proto = Protocol::cidc;
  std::vector<PacketRecord> packets;  ///< gen_slot is not stored; left at 0
};
PacketFile read_packets(std::istream& is, const std::string& source_name);

void write_slot_trace_file(const std::string& path, const std::vector<SlotRow>& rows);
void write_packets_file(const std::string& path, Protocol proto,
                        const std::vector<PacketRecord>& packets);
std::vector<SlotRow> read_slot_trace_file(const std::string& path);
PacketFile read_packets_file(const std::string& path);

const char* outcome_name(Outcome o);
const char* protocol_name(Protocol p);

/// Text for one float field: shortest form at nine significant digits.
std::string format_float(double v);

}  // namespace cidc
