#pragma once

// Drumroll notation: a one-bar, six-instrument grid of sixteenth notes.
//
//   K: O---|----|O---|----
//   S: ----|O---|----|O---
//   H: x---|x---|x---|x---
//   T: ----|----|----|----
//   C: O---|----|----|----
//   R: ----|----|----|----
//
// Every row holds 16 cells split into four beats by '|'. A cell is '-' for a
// rest or one of O/o/X/x; which glyphs are legal depends on the instrument.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace grooveedit {

inline constexpr std::size_t kInstrumentCount = 6;
inline constexpr std::size_t kStepsPerBar = 16;
inline constexpr std::size_t kStepsPerBeat = 4;
inline constexpr std::size_t kBeatsPerBar = 4;

enum class Instrument : std::uint8_t { Kick, Snare, HiHat, Toms, Crash, Ride };

/// Canonical display order, matching the row order of the notation.
inline constexpr std::array<Instrument, kInstrumentCount> kAllInstruments = {
    Instrument::Kick, Instrument::Snare, Instrument::HiHat,
    Instrument::Toms, Instrument::Crash, Instrument::Ride};

constexpr std::size_t index_of(Instrument inst) noexcept {
  return static_cast<std::size_t>(inst);
}

constexpr char instrument_letter(Instrument inst) noexcept {
  constexpr std::array<char, kInstrumentCount> letters = {'K', 'S', 'H', 'T', 'C', 'R'};
  return letters[index_of(inst)];
}

constexpr std::string_view instrument_name(Instrument inst) noexcept {
  constexpr std::array<std::string_view, kInstrumentCount> names = {
      "kick drum", "snare drum", "hi-hat", "toms", "crash cymbal", "ride cymbal"};
  return names[index_of(inst)];
}

constexpr std::optional<Instrument> instrument_from_letter(char c) noexcept {
  for (Instrument inst : kAllInstruments) {
    if (instrument_letter(inst) == c) return inst;
  }
  return std::nullopt;
}

// How a drum is struck, independent of dynamics. Which timbres an instrument
// supports follows the notation legend:
//   K, T, C: O/o = head
//   S:       O/o = head,  X/x = sidestick
//   H:       O/o = open,  X/x = closed
//   R:       O/o = bell,  X/x = bow
enum class Timbre : std::uint8_t { Head, Sidestick, Open, Closed, Bell, Bow };

inline constexpr std::array<Timbre, 6> kAllTimbres = {
    Timbre::Head, Timbre::Sidestick, Timbre::Open, Timbre::Closed, Timbre::Bell, Timbre::Bow};

constexpr std::string_view timbre_name(Timbre t) noexcept {
  switch (t) {
    case Timbre::Head: return "head";
    case Timbre::Sidestick: return "sidestick";
    case Timbre::Open: return "open";
    case Timbre::Closed: return "closed";
    case Timbre::Bell: return "bell";
    case Timbre::Bow: return "bow";
  }
  return "?";
}

constexpr std::optional<Timbre> timbre_from_name(std::string_view name) noexcept {
  for (Timbre t : kAllTimbres) {
    if (timbre_name(t) == name) return t;
  }
  return std::nullopt;
}

/// Timbre selected by the 'O'/'o' glyphs of an instrument.
constexpr Timbre primary_timbre(Instrument inst) noexcept {
  switch (inst) {
    case Instrument::HiHat: return Timbre::Open;
    case Instrument::Ride: return Timbre::Bell;
    default: return Timbre::Head;
  }
}

/// Timbre selected by the 'X'/'x' glyphs, if the instrument has one.
constexpr std::optional<Timbre> alternate_timbre(Instrument inst) noexcept {
  switch (inst) {
    case Instrument::Snare: return Timbre::Sidestick;
    case Instrument::HiHat: return Timbre::Closed;
    case Instrument::Ride: return Timbre::Bow;
    default: return std::nullopt;
  }
}

constexpr bool supports_timbre(Instrument inst, Timbre t) noexcept {
  return primary_timbre(inst) == t || alternate_timbre(inst) == t;
}

/// One struck note. Stored as the glyph; everything else is derived from it
/// together with the instrument it sits on.
class Articulation {
 public:
  constexpr Articulation() noexcept = default;

  static constexpr bool is_glyph(char c) noexcept {
    return c == 'O' || c == 'o' || c == 'X' || c == 'x';
  }

  static constexpr std::optional<Articulation> from_glyph(char c) noexcept {
    if (!is_glyph(c)) return std::nullopt;
    return Articulation(c);
  }

  static constexpr Articulation make(bool alternate, bool hard) noexcept {
    return Articulation(alternate ? (hard ? 'X' : 'x') : (hard ? 'O' : 'o'));
  }

  constexpr char glyph() const noexcept { return glyph_; }
  constexpr bool hard() const noexcept { return glyph_ == 'O' || glyph_ == 'X'; }
  constexpr bool alternate() const noexcept { return glyph_ == 'X' || glyph_ == 'x'; }

  constexpr bool legal_for(Instrument inst) const noexcept {
    return !alternate() || alternate_timbre(inst).has_value();
  }

  /// Precondition: legal_for(inst).
  constexpr Timbre timbre(Instrument inst) const noexcept {
    return alternate() ? *alternate_timbre(inst) : primary_timbre(inst);
  }

  friend constexpr bool operator==(Articulation, Articulation) noexcept = default;

 private:
  constexpr explicit Articulation(char glyph) noexcept : glyph_(glyph) {}
  char glyph_ = 'O';
};

/// Legal glyphs for an instrument in legend order (O, o, X, x).
inline std::vector<Articulation> legal_articulations(Instrument inst) {
  std::vector<Articulation> out;
  for (char c : {'O', 'o', 'X', 'x'}) {
    auto a = *Articulation::from_glyph(c);
    if (a.legal_for(inst)) out.push_back(a);
  }
  return out;
}

/// A sixteenth-note slot in the bar, 0..15.
class NotePosition {
 public:
  static constexpr std::optional<NotePosition> make(int index) noexcept {
    if (index < 0 || index >= static_cast<int>(kStepsPerBar)) return std::nullopt;
    return NotePosition(static_cast<std::size_t>(index));
  }

  /// Throws std::out_of_range for indices outside 0..15.
  static NotePosition at(int index) {
    auto p = make(index);
    if (!p) throw std::out_of_range("note position out of range: " + std::to_string(index));
    return *p;
  }

  constexpr std::size_t index() const noexcept { return index_; }
  constexpr std::size_t beat() const noexcept { return index_ / kStepsPerBeat; }
  constexpr std::size_t subdivision() const noexcept { return index_ % kStepsPerBeat; }

  /// Any position that is not the first sixteenth of its beat.
  constexpr bool is_backbeat() const noexcept { return subdivision() != 0; }

  friend constexpr auto operator<=>(NotePosition, NotePosition) noexcept = default;

 private:
  constexpr explicit NotePosition(std::size_t index) noexcept : index_(index) {}
  std::size_t index_;
};

using Cell = std::optional<Articulation>;
using Row = std::array<Cell, kStepsPerBar>;

class Groove {
 public:
  Groove() = default;

  /// Cell accessor. Throws std::invalid_argument when the articulation is not
  /// legal for the instrument, so a Groove can never hold an illegal cell.
  void set(Instrument inst, NotePosition pos, Cell cell) {
    if (cell && !cell->legal_for(inst)) {
      throw std::invalid_argument(std::string("articulation '") + cell->glyph() +
                                  "' is not legal for instrument " + instrument_letter(inst));
    }
    rows_[index_of(inst)][pos.index()] = cell;
  }

  void clear(Instrument inst, NotePosition pos) { rows_[index_of(inst)][pos.index()].reset(); }

  const Cell& cell(Instrument inst, NotePosition pos) const noexcept {
    return rows_[index_of(inst)][pos.index()];
  }

  const Row& row(Instrument inst) const noexcept { return rows_[index_of(inst)]; }

  const std::string& label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  /// Grid equality; the label is descriptive and does not take part.
  friend bool operator==(const Groove& a, const Groove& b) noexcept { return a.rows_ == b.rows_; }

 private:
  std::array<Row, kInstrumentCount> rows_{};
  std::string label_;
};

enum class NotationErrorKind {
  MissingInstrument,
  BadRowLength,
  IllegalArticulation,
  DuplicateInstrument,
};

constexpr std::string_view to_string(NotationErrorKind kind) noexcept {
  switch (kind) {
    case NotationErrorKind::MissingInstrument: return "MissingInstrument";
    case NotationErrorKind::BadRowLength: return "BadRowLength";
    case NotationErrorKind::IllegalArticulation: return "IllegalArticulation";
    case NotationErrorKind::DuplicateInstrument: return "DuplicateInstrument";
  }
  return "?";
}

class NotationError : public std::runtime_error {
 public:
  NotationError(NotationErrorKind kind, std::size_t line, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + " (line " + std::to_string(line) +
                           "): " + detail),
        kind_(kind),
        line_(line) {}

  NotationErrorKind kind() const noexcept { return kind_; }
  /// 1-based line within the parsed block.
  std::size_t line() const noexcept { return line_; }

 private:
  NotationErrorKind kind_;
  std::size_t line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// Row body after the "X:" label, e.g. "O---|----|O---|----".
inline Row parse_row_body(Instrument inst, std::string_view body, std::size_t line) {
  body = trim(body);
  constexpr std::size_t kExpectedWidth = kStepsPerBar + kBeatsPerBar - 1;
  Row row{};
  std::size_t step = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    const bool separator_slot = (i + 1) % (kStepsPerBeat + 1) == 0;
    if (separator_slot) {
      if (c != '|') {
        throw NotationError(NotationErrorKind::BadRowLength, line,
                            "expected '|' at column " + std::to_string(i + 1));
      }
      continue;
    }
    if (c == '|') {
      throw NotationError(NotationErrorKind::BadRowLength, line,
                          "misplaced '|' at column " + std::to_string(i + 1));
    }
    if (step >= kStepsPerBar) {
      throw NotationError(NotationErrorKind::BadRowLength, line, "more than 16 cells");
    }
    if (c != '-') {
      auto art = Articulation::from_glyph(c);
      if (!art || !art->legal_for(inst)) {
        throw NotationError(NotationErrorKind::IllegalArticulation, line,
                            std::string("glyph '") + c + "' is not legal for " +
                                instrument_letter(inst));
      }
      row[step] = art;
    }
    ++step;
  }
  if (step != kStepsPerBar || body.size() != kExpectedWidth) {
    throw NotationError(NotationErrorKind::BadRowLength, line,
                        "expected 16 cells in 4 beats, got " + std::to_string(step));
  }
  return row;
}

}  // namespace detail

/// Strict parse of a six-row drumroll block. Leading and trailing whitespace
/// on each line, and a single trailing newline, are tolerated; anything else
/// that deviates from the grammar throws NotationError.
inline Groove parse_groove(std::string_view text) {
  auto lines = detail::split_lines(text);
  // One trailing LF terminates the last row rather than opening a new one.
  if (lines.size() > 1 && detail::trim(lines.back()).empty() && !text.empty() &&
      text.back() == '\n') {
    lines.pop_back();
  }

  Groove groove;
  std::array<bool, kInstrumentCount> seen{};
  std::size_t line_no = 0;
  for (std::string_view raw : lines) {
    ++line_no;
    std::string_view line = detail::trim(raw);
    if (line_no > kInstrumentCount) {
      throw NotationError(NotationErrorKind::MissingInstrument, line_no,
                          "block has more than 6 rows");
    }
    if (line.size() < 2 || line[1] != ':') {
      throw NotationError(NotationErrorKind::MissingInstrument, line_no,
                          "row does not start with an instrument label");
    }
    auto inst = instrument_from_letter(line[0]);
    if (!inst) {
      throw NotationError(NotationErrorKind::MissingInstrument, line_no,
                          std::string("unknown instrument label '") + line[0] + "'");
    }
    if (seen[index_of(*inst)]) {
      throw NotationError(NotationErrorKind::DuplicateInstrument, line_no,
                          std::string("instrument ") + line[0] + " appears twice");
    }
    seen[index_of(*inst)] = true;
    Row row = detail::parse_row_body(*inst, line.substr(2), line_no);
    for (std::size_t i = 0; i < kStepsPerBar; ++i) {
      groove.set(*inst, NotePosition::at(static_cast<int>(i)), row[i]);
    }
  }
  for (Instrument inst : kAllInstruments) {
    if (!seen[index_of(inst)]) {
      throw NotationError(NotationErrorKind::MissingInstrument, line_no,
                          std::string("missing instrument ") + instrument_letter(inst));
    }
  }
  return groove;
}

inline std::string serialize_row(const Row& row) {
  std::string out;
  out.reserve(kStepsPerBar + kBeatsPerBar - 1);
  for (std::size_t i = 0; i < kStepsPerBar; ++i) {
    if (i > 0 && i % kStepsPerBeat == 0) out.push_back('|');
    out.push_back(row[i] ? row[i]->glyph() : '-');
  }
  return out;
}

/// Canonical text: K,S,H,T,C,R rows, "X: " prefix, LF-separated, no trailing
/// newline.
inline std::string serialize_groove(const Groove& g) {
  std::string out;
  for (Instrument inst : kAllInstruments) {
    if (!out.empty()) out.push_back('\n');
    out.push_back(instrument_letter(inst));
    out += ": ";
    out += serialize_row(g.row(inst));
  }
  return out;
}

inline Cell note_at(const Groove& g, Instrument inst, NotePosition pos) noexcept {
  return g.cell(inst, pos);
}

inline std::size_t count_hits(const Groove& g, Instrument inst) noexcept {
  std::size_t n = 0;
  for (const Cell& c : g.row(inst)) n += c.has_value();
  return n;
}

inline std::size_t total_hits(const Groove& g) noexcept {
  std::size_t n = 0;
  for (Instrument inst : kAllInstruments) n += count_hits(g, inst);
  return n;
}

inline std::size_t backbeat_hit_count(const Groove& g) noexcept {
  std::size_t n = 0;
  for (Instrument inst : kAllInstruments) {
    const Row& row = g.row(inst);
    for (std::size_t i = 0; i < kStepsPerBar; ++i) {
      if (row[i] && i % kStepsPerBeat != 0) ++n;
    }
  }
  return n;
}

}  // namespace grooveedit
