#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ivs/contracts.hpp"

namespace ivs {

// 64-bit FNV-1a of a byte string; used to stamp traces with the
// configuration that produced them.
std::uint64_t fnv1a(const std::string& data);
std::string hash_hex(std::uint64_t h);

// Doubles are printed with 17 significant digits, which round-trips the
// exact bit pattern through parsing.
std::string format_double(double v);

struct TraceHeader {
    std::string config_hash;
    int grid_density = 0;
    Duration step{0};
};

// Structured text form: bit-exact rational times, 17-digit floats, shared
// system matrices serialized once. Reading back reproduces every channel
// payload exactly, so contract verdicts computed offline match the in-run
// ones.
std::string write_sections_text(const TraceHeader& header, const ChannelMap& channels);
std::pair<TraceHeader, ChannelMap> read_sections_text(const std::string& text);

// Plot-ready CSV: one row per grid instant, one column per channel (labels
// as text, numeric channels as 17-digit floats). Sampled at `step`. Columns
// follow `order` when given (remaining channels appended alphabetically).
std::string write_trace_csv(const TraceHeader& header, const ChannelMap& channels,
                            const Duration& step,
                            const std::vector<std::string>& order = {});

// Row form of a single section: one row per jump and per flow cell,
// (t_start, t_end, kind, payload), times as exact rational strings.
std::string write_section_rows(const HybridSection& section);

}  // namespace ivs
