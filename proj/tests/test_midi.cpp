#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "grooveedit/midi.hpp"
#include "support/oracles.hpp"
#include "support/smf_reader.hpp"

using namespace grooveedit;
using namespace grooveedit::midi;

namespace {

const std::filesystem::path kFixtures = GROOVEEDIT_FIXTURES_DIR;

const char* kWorkedExample =
    "K: O---|----|O---|----\n"
    "S: ----|O---|----|O---\n"
    "H: x---|x---|x---|x---\n"
    "T: ----|----|----|----\n"
    "C: O---|----|----|----\n"
    "R: ----|----|----|----";

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t note_ons(const smf_test::File& f) {
  std::size_t n = 0;
  for (const auto& e : f.tracks.at(0).events) n += e.is_note_on();
  return n;
}

}  // namespace

TEST(Export, WorkedExampleFourRepeats) {
  const auto bytes = groove_to_midi(parse_groove(kWorkedExample), MidiConfig{120, 480, 4});
  const auto f = smf_test::parse(bytes);
  EXPECT_EQ(f.format, 0);
  EXPECT_EQ(f.division, 480);
  ASSERT_EQ(f.tracks.size(), 1u);
  EXPECT_EQ(note_ons(f), 36u);

  const auto& ev = f.tracks[0].events;
  ASSERT_GE(ev.size(), 2u);
  EXPECT_EQ(ev[0].status, 0xFF);
  EXPECT_EQ(ev[0].meta_type, 0x51);
  ASSERT_EQ(ev[0].data.size(), 3u);
  EXPECT_EQ((ev[0].data[0] << 16) | (ev[0].data[1] << 8) | ev[0].data[2], 500000);
  EXPECT_EQ(ev[1].meta_type, 0x58);
  EXPECT_EQ(ev[1].data, (std::vector<std::uint8_t>{4, 2, 24, 8}));

  for (const auto& e : ev) {
    if (e.status == 0xFF) continue;
    EXPECT_EQ(e.channel(), kPercussionChannel);
    EXPECT_EQ(e.tick % (480 / 4), 0u);
  }
  EXPECT_EQ(ev.back().meta_type, 0x2F);
  EXPECT_EQ(ev.back().tick, 4u * 16u * 120u);
}

TEST(Export, NotesMatchTheGrid) {
  std::mt19937 rng(3);
  const auto map = DrumMap::general_midi();
  for (int i = 0; i < 50; ++i) {
    const Groove g = parse_groove(oracle::random_groove_text(rng));
    const MidiConfig cfg{90 + i, 96, 1 + i % 3};
    const auto f = smf_test::parse(groove_to_midi(g, cfg));
    std::multiset<std::pair<std::uint32_t, std::pair<int, int>>> want, got;
    for (int r = 0; r < cfg.repeats; ++r) {
      for (Instrument inst : kAllInstruments) {
        for (int p = 0; p < 16; ++p) {
          const Cell& c = g.row(inst)[static_cast<std::size_t>(p)];
          if (!c) continue;
          const DrumVoice v = map.voice(inst, *c);
          want.insert({static_cast<std::uint32_t>((r * 16 + p) * cfg.step_ticks()), {v.key, v.velocity}});
        }
      }
    }
    std::map<int, int> open;
    for (const auto& e : f.tracks[0].events) {
      if (e.is_note_on()) {
        got.insert({e.tick, {e.data[0], e.data[1]}});
        ++open[e.data[0]];
      } else if (e.is_note_off()) {
        ASSERT_GT(open[e.data[0]], 0) << "note-off without note-on";
        --open[e.data[0]];
      }
    }
    EXPECT_EQ(got, want);
    for (const auto& [key, n] : open) EXPECT_EQ(n, 0) << "key " << key << " left sounding";
  }
}

TEST(Export, EmptyGrooveStillSpansTheBars) {
  const auto f = smf_test::parse(groove_to_midi(Groove{}, MidiConfig{120, 480, 2}));
  EXPECT_EQ(note_ons(f), 0u);
  EXPECT_EQ(f.tracks[0].events.back().tick, 2u * 16u * 120u);
}

TEST(Export, TempoFollowsBpm) {
  const auto f = smf_test::parse(groove_to_midi(Groove{}, MidiConfig{90, 480, 1}));
  const auto& d = f.tracks[0].events[0].data;
  EXPECT_EQ((d[0] << 16) | (d[1] << 8) | d[2], 666666);
}

TEST(Export, GoldenFilesMatchByteForByte) {
  struct Case {
    const char* name;
    MidiConfig cfg;
  };
  for (const Case& c : {Case{"worked_example_r4", {120, 480, 4}}, Case{"all_rest_r1", {120, 480, 1}},
                        Case{"bossa_90bpm_ppq96_r2", {90, 96, 2}}}) {
    const Groove g = parse_groove(read_text(kFixtures / (std::string(c.name) + ".groove")));
    const auto golden = read_bytes(kFixtures / (std::string(c.name) + ".mid"));
    ASSERT_FALSE(golden.empty()) << c.name;
    EXPECT_EQ(groove_to_midi(g, c.cfg), golden) << c.name;
  }
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(MidiConfig{}.validate());
  EXPECT_EQ(MidiConfig{}.microseconds_per_quarter(), 500000u);
  EXPECT_THROW((MidiConfig{0, 480, 4}.validate()), std::invalid_argument);
  EXPECT_THROW((MidiConfig{120, 0, 4}.validate()), std::invalid_argument);
  EXPECT_THROW((MidiConfig{120, 482, 4}.validate()), std::invalid_argument);
  EXPECT_THROW((MidiConfig{120, 480, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((MidiConfig{120, 480, 4, 121}.validate()), std::invalid_argument);
  EXPECT_THROW(groove_to_midi(Groove{}, MidiConfig{120, 480, 0}), std::invalid_argument);
}

TEST(Mapping, EighteenRowsWithDistinctVoices) {
  const auto map = DrumMap::general_midi();
  const auto rows = mapping_rows(map);
  EXPECT_EQ(rows.size(), 18u);
  std::set<std::pair<int, int>> voices;
  std::set<int> keys;
  for (const auto& r : rows) {
    voices.insert({r.voice.key, r.voice.velocity});
    keys.insert(r.voice.key);
    EXPECT_EQ(r.voice.velocity, r.hard ? 110 : 70);
  }
  EXPECT_EQ(voices.size(), 18u);
  EXPECT_EQ(keys, (std::set<int>{36, 37, 38, 42, 46, 47, 49, 51, 53}));
  EXPECT_GT(map.hard_velocity(), map.soft_velocity());
  EXPECT_THROW(DrumMap::general_midi(128, 70), std::invalid_argument);
}

TEST(Mapping, DescriptionListsEveryRow) {
  const std::string text = describe_mapping();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 19);
  EXPECT_NE(text.find("sidestick"), std::string::npos);
  EXPECT_NE(text.find("53"), std::string::npos);
}
