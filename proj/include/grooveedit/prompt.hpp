#pragma once

// Zero-shot edit prompt and recovery of the edited groove from a reply.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "grooveedit/notation.hpp"

namespace grooveedit {

inline constexpr std::string_view kFence = "@@@";

inline constexpr std::string_view kNotationTutorial =
    "You will compose some drum beats for a song. First, let's learn about a drum notation. "
    "A bar of drum beats may look like this:\n"
    "@@@\n"
    "K: O---|----|O---|----\n"
    "S: ----|X--o|----|O---\n"
    "H: x---|x---|x---|x---\n"
    "T: ----|----|-O--|---o\n"
    "C: O---|----|----|----\n"
    "R: O---|----|----|----\n"
    "@@@\n"
    "Each line corresponds to an instrument on a drum set:\n"
    "K: Kick drum\n"
    "S: Snare drum\n"
    "H: Hihat\n"
    "T: Toms\n"
    "C: Crash cymbal\n"
    "R: Ride cymbal\n"
    "Each character in a line represents a 16th note. Each four characters separated by | constitute "
    "a beat. Note that there are 16 characters, not counting the |, because there are 16 16th notes "
    "in a bar which constitute 4 beats. Each character is - if the instrument is not played on that "
    "note. When played, the character denotes the articulation which varies by instruments.\n"
    "K: O is a hard hit, while o is a soft hit\n"
    "S: O is a hard hit, while o is a soft open hit on the head; additionally, X and x are hard and "
    "soft sidestick hits\n"
    "H: O is a hard open hit, while o is a soft open hit; additionally, X and x are hard and soft "
    "closed hits\n"
    "T: O is a hard hit, while o is a soft hit\n"
    "C: O is a hard hit, while o is a soft hit\n"
    "R: O is a hard open hit on the bell, while o is a soft open hit on the bell; additionally, X and "
    "x are hard and soft closed hits on the bow\n";

inline constexpr std::string_view kGivenGrooveHeader = "You are given the following drum groove.\n";
inline constexpr std::string_view kEditRequestHeader = "You received the following edit request.\n";
inline constexpr std::string_view kEditClosing =
    "You will now edit this drum groove and generate a new one in the above notation. You are free "
    "to show your thought process, but only the final groove should be between @@@ which will be "
    "used.";

/// Wraps serialized groove text in fence lines.
inline std::string fenced(std::string_view drumroll) {
  std::string out(kFence);
  out += '\n';
  out += drumroll;
  out += '\n';
  out += kFence;
  return out;
}

/// Single user message asking for an edit. Byte-identical for equal inputs.
inline std::string build_prompt(const Groove& g, std::string_view instruction) {
  std::string out(kNotationTutorial);
  out += kGivenGrooveHeader;
  out += fenced(serialize_groove(g));
  out += '\n';
  out += kEditRequestHeader;
  out += '"';
  out += instruction;
  out += "\"\n";
  out += kEditClosing;
  return out;
}

enum class MalformedKind { NoFence, UnclosedFence, ParseError, Transport };

constexpr std::string_view to_string(MalformedKind k) noexcept {
  switch (k) {
    case MalformedKind::NoFence: return "NoFence";
    case MalformedKind::UnclosedFence: return "UnclosedFence";
    case MalformedKind::ParseError: return "ParseError";
    case MalformedKind::Transport: return "Transport";
  }
  return "?";
}

struct Malformed {
  MalformedKind kind;
  std::string detail;

  /// Machine-readable reason, e.g. "NoFence" or "ParseError: BadRowLength ...".
  std::string reason() const {
    std::string out(to_string(kind));
    if (!detail.empty()) out += ": " + detail;
    return out;
  }
};

using Extraction = std::variant<Groove, Malformed>;

/// Takes the last complete @@@-fenced block of a reply and strict-parses it.
/// A fence is a line that is exactly "@@@" after trimming.
inline Extraction extract_groove(std::string_view response) {
  std::vector<std::size_t> fence_lines;
  const auto lines = detail::split_lines(response);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]) == kFence) fence_lines.push_back(i);
  }
  if (fence_lines.empty()) return Malformed{MalformedKind::NoFence, {}};
  if (fence_lines.size() < 2) return Malformed{MalformedKind::UnclosedFence, {}};

  const std::size_t pairs = fence_lines.size() / 2;
  const std::size_t open = fence_lines[2 * (pairs - 1)];
  const std::size_t close = fence_lines[2 * (pairs - 1) + 1];
  std::string block;
  for (std::size_t i = open + 1; i < close; ++i) {
    if (i > open + 1) block += '\n';
    block += lines[i];
  }
  try {
    return parse_groove(block);
  } catch (const NotationError& e) {
    return Malformed{MalformedKind::ParseError, e.what()};
  }
}

}  // namespace grooveedit
