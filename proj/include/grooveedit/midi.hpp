#pragma once

// Standard MIDI File export of a groove on the General MIDI percussion
// channel. Output is a Format-0 file with one track:
//
//   tempo meta, 4/4 time-signature meta,
//   note-on / note-off pairs for every hit, bar after bar,
//   end-of-track on the final bar line.

#include <algorithm>
#include <array>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grooveedit/notation.hpp"

namespace grooveedit::midi {

/// Zero-based channel 9 is the percussion channel (channel 10 to musicians).
inline constexpr std::uint8_t kPercussionChannel = 9;

struct MidiConfig {
  int bpm = 120;
  int ppq = 480;
  int repeats = 4;
  /// Note length in ticks; 0 means one sixteenth (ppq / 4).
  int gate = 0;

  int step_ticks() const noexcept { return ppq / 4; }
  int gate_ticks() const noexcept { return gate > 0 ? gate : step_ticks(); }

  std::uint32_t microseconds_per_quarter() const noexcept {
    return static_cast<std::uint32_t>(60'000'000 / bpm);
  }

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const {
    if (bpm <= 0) throw std::invalid_argument("bpm must be positive");
    if (60'000'000 / bpm > 0xFFFFFF) throw std::invalid_argument("bpm too slow for a tempo meta event");
    if (ppq <= 0 || ppq % 4 != 0 || ppq > 0x7FFF) {
      throw std::invalid_argument("ppq must be a positive multiple of 4 below 32768");
    }
    if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
    if (gate < 0 || gate > step_ticks()) throw std::invalid_argument("gate must be within one sixteenth");
  }
};

struct DrumVoice {
  std::uint8_t key;
  std::uint8_t velocity;
};

/// (instrument, timbre, dynamic) -> key and velocity. Defaults follow the GM
/// level-1 percussion map with hard = 110 and soft = 70.
class DrumMap {
 public:
  static DrumMap general_midi(std::uint8_t hard_velocity = 110, std::uint8_t soft_velocity = 70) {
    if (hard_velocity < 1 || hard_velocity > 127 || soft_velocity < 1 || soft_velocity > 127) {
      throw std::invalid_argument("velocities must be within 1..127");
    }
    DrumMap m;
    m.hard_ = hard_velocity;
    m.soft_ = soft_velocity;
    return m;
  }

  std::uint8_t key(Instrument inst, Timbre t) const {
    switch (inst) {
      case Instrument::Kick: return 36;
      case Instrument::Snare: return t == Timbre::Sidestick ? 37 : 38;
      case Instrument::HiHat: return t == Timbre::Open ? 46 : 42;
      case Instrument::Toms: return 47;
      case Instrument::Crash: return 49;
      case Instrument::Ride: return t == Timbre::Bell ? 53 : 51;
    }
    throw std::logic_error("unknown instrument");
  }

  DrumVoice voice(Instrument inst, Articulation a) const {
    return {key(inst, a.timbre(inst)), a.hard() ? hard_ : soft_};
  }

  std::uint8_t hard_velocity() const noexcept { return hard_; }
  std::uint8_t soft_velocity() const noexcept { return soft_; }

 private:
  DrumMap() = default;
  std::uint8_t hard_ = 110;
  std::uint8_t soft_ = 70;
};

struct MappingRow {
  Instrument instrument;
  char glyph;
  Timbre timbre;
  bool hard;
  DrumVoice voice;
};

/// One row per legal (instrument, glyph) pair, in notation order.
inline std::vector<MappingRow> mapping_rows(const DrumMap& map) {
  std::vector<MappingRow> rows;
  for (Instrument inst : kAllInstruments) {
    for (Articulation a : legal_articulations(inst)) {
      rows.push_back({inst, a.glyph(), a.timbre(inst), a.hard(), map.voice(inst, a)});
    }
  }
  return rows;
}

/// Fixed-width text table of the active mapping.
inline std::string describe_mapping(const DrumMap& map = DrumMap::general_midi()) {
  std::ostringstream out;
  out << std::left << std::setw(6) << "inst" << std::setw(7) << "glyph" << std::setw(11) << "timbre"
      << std::setw(6) << "dyn" << std::setw(5) << "key" << "velocity\n";
  for (const MappingRow& r : mapping_rows(map)) {
    out << std::left << std::setw(6) << instrument_letter(r.instrument) << std::setw(7) << r.glyph
        << std::setw(11) << timbre_name(r.timbre) << std::setw(6) << (r.hard ? "hard" : "soft")
        << std::setw(5) << static_cast<int>(r.voice.key) << static_cast<int>(r.voice.velocity) << '\n';
  }
  return out.str();
}

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put_u16(out, v >> 16);
  put_u16(out, v & 0xFFFF);
}

inline void put_varlen(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::uint8_t buf[4];
  int n = 0;
  buf[n++] = v & 0x7F;
  while ((v >>= 7) != 0) buf[n++] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
  while (n > 0) out.push_back(buf[--n]);
}

struct TimedEvent {
  std::uint32_t tick;
  int order;  // note-offs sort before note-ons at the same tick
  std::uint8_t status;
  std::uint8_t key;
  std::uint8_t velocity;
};

}  // namespace detail

/// Encodes the groove as SMF bytes. Throws std::invalid_argument for an
/// invalid configuration.
inline std::vector<std::uint8_t> groove_to_midi(const Groove& g, const MidiConfig& cfg = {},
                                                const DrumMap& map = DrumMap::general_midi()) {
  cfg.validate();
  const std::uint32_t step = static_cast<std::uint32_t>(cfg.step_ticks());
  const std::uint32_t gate = static_cast<std::uint32_t>(cfg.gate_ticks());

  std::vector<detail::TimedEvent> events;
  for (int r = 0; r < cfg.repeats; ++r) {
    for (std::size_t p = 0; p < kStepsPerBar; ++p) {
      for (Instrument inst : kAllInstruments) {
        const Cell& c = g.row(inst)[p];
        if (!c) continue;
        const DrumVoice v = map.voice(inst, *c);
        const std::uint32_t on = (static_cast<std::uint32_t>(r) * kStepsPerBar + p) * step;
        events.push_back({on, 1, static_cast<std::uint8_t>(0x90 | kPercussionChannel), v.key, v.velocity});
        events.push_back({on + gate, 0, static_cast<std::uint8_t>(0x80 | kPercussionChannel), v.key, 0});
      }
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
  });

  std::vector<std::uint8_t> track;
  const std::uint32_t tempo = cfg.microseconds_per_quarter();
  track.insert(track.end(), {0x00, 0xFF, 0x51, 0x03});
  track.push_back(static_cast<std::uint8_t>(tempo >> 16));
  track.push_back(static_cast<std::uint8_t>(tempo >> 8));
  track.push_back(static_cast<std::uint8_t>(tempo));
  // 4/4, 24 MIDI clocks per click, 8 thirty-seconds per quarter.
  track.insert(track.end(), {0x00, 0xFF, 0x58, 0x04, 0x04, 0x02, 0x18, 0x08});

  std::uint32_t now = 0;
  for (const auto& e : events) {
    detail::put_varlen(track, e.tick - now);
    now = e.tick;
    track.insert(track.end(), {e.status, e.key, e.velocity});
  }
  const std::uint32_t end = static_cast<std::uint32_t>(cfg.repeats) * kStepsPerBar * step;
  detail::put_varlen(track, end - now);
  track.insert(track.end(), {0xFF, 0x2F, 0x00});

  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'M', 'T', 'h', 'd'});
  detail::put_u32(out, 6);
  detail::put_u16(out, 0);  // format 0
  detail::put_u16(out, 1);  // one track
  detail::put_u16(out, static_cast<std::uint32_t>(cfg.ppq));
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  detail::put_u32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

}  // namespace grooveedit::midi
