// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

// Writes the bundled synthetic lyrics corpus. Five themes cut across five
// genres, each genre leaning on one theme. Every stratum mentions the
// gendered attribute words next to the target words; in Country the female
// words sit beside appearance words and the male words beside strength
// words, everywhere else the pairing is random.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "biasbeam/csv.hpp"
#include "biasbeam/random.hpp"

namespace {

using Words = std::vector<std::string>;

const std::vector<Words> kThemes = {
    {"dance", "night", "club", "party", "floor", "music", "lights", "move", "groove", "weekend", "shake", "beat"},
    {"money", "street", "hustle", "city", "block", "grind", "cash", "corner", "deal", "crew", "chain", "paper"},
    {"road", "truck", "whiskey", "river", "town", "dirt", "highway", "porch", "field", "rain", "barn", "creek"},
    {"heart", "tears", "goodbye", "lonely", "memory", "broken", "cry", "miss", "gone", "alone", "promise", "ache"},
    {"fire", "guitar", "rebel", "loud", "wild", "burn", "scream", "storm", "thunder", "freedom", "amp", "riot"},
};

const Words kFillers = {"the", "and", "we", "in", "my", "a", "to", "on", "all", "with", "you", "oh"};

const Words kMale = {"boy", "him", "father", "boyfriend", "dad", "he", "man"};
const Words kFemale = {"girl", "her", "lady", "girlfriend", "mother", "she", "woman"};
const Words kAppearance = {"thin", "gorgeous", "fat", "pretty", "beautiful", "handsome"};
const Words kStrength = {"bold", "leader", "strong", "dominant", "power"};
const Words kOtherTargets = {"joy",   "wonderful", "love",    "peace", "happy",    "terrible", "hatred",
                             "nasty", "kill",      "evil",    "intelligent", "genius", "smart",
                             "brilliant", "clever", "loser", "failure", "weak", "surrender", "follow"};

struct GenreSpec {
  std::string canonical;
  Words raw_labels;
  std::size_t theme;
  bool skewed;
};

const std::vector<GenreSpec> kGenres = {
    {"pop", {"Pop", "pop", "POP"}, 0, false},
    {"rap", {"Rap", "Hip Hop", "hip-hop"}, 1, false},
    {"country", {"Country", "country"}, 2, true},
    {"rnb", {"R&B", "rnb", "RnB"}, 3, false},
    {"rock", {"Rock", "ROCK", "rock"}, 4, false},
};

class Writer {
 public:
  explicit Writer(std::uint64_t seed) : rng_(seed) {}

  const std::string& pick(const Words& words) { return words[rng_.below(words.size())]; }

  std::string theme_line(const Words& theme) {
    std::string line;
    const auto n = 5 + rng_.below(3);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (!line.empty()) line += ' ';
      line += rng_.uniform() < 0.3 ? pick(kFillers) : pick(theme);
    }
    return line;
  }

  std::string gender_line(bool skewed) {
    const bool male = rng_.below(2) == 0;
    const auto& who = pick(male ? kMale : kFemale);
    const double r = rng_.uniform();
    const Words* targets = &kOtherTargets;
    if (r < 0.5) {
      if (skewed) targets = male ? &kStrength : &kAppearance;
      else targets = rng_.below(2) == 0 ? &kStrength : &kAppearance;
    }
    return pick(kFillers) + " " + who + " " + pick(*targets) + " " + pick(kFillers) + " " + pick(*targets);
  }

  std::string lyrics(std::size_t theme, bool skewed) {
    std::string text;
    const auto lines = 6 + rng_.below(5);
    for (std::uint64_t i = 0; i < lines; ++i) {
      if (!text.empty()) text += '\n';
      if (rng_.uniform() < 0.6) {
        const auto t = rng_.uniform() < 0.75 ? theme : rng_.below(kThemes.size());
        text += theme_line(kThemes[t]);
      } else {
        text += gender_line(skewed);
      }
    }
    return text;
  }

  biasbeam::Rng& rng() { return rng_; }

 private:
  biasbeam::Rng rng_;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_demo_corpus OUT.csv\n";
    return 1;
  }
  std::ofstream out(argv[1], std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << argv[1] << "\n";
    return 2;
  }

  Writer writer(20260401);
  const std::vector<std::string> header = {"id", "title", "artist", "genre", "year", "lyrics", "language"};
  biasbeam::csv::write_row(out, header);

  std::size_t serial = 0;
  auto next_id = [&] { return "song-" + std::to_string(++serial); };
  for (const auto& genre : kGenres) {
    for (int i = 0; i < 100; ++i) {
      auto& rng = writer.rng();
      const auto year = rng.uniform() < 0.05 ? std::string() : std::to_string(1960 + rng.below(60));
      const std::vector<std::string> row = {next_id(),
                                            genre.canonical + " song " + std::to_string(i + 1),
                                            genre.canonical + " artist " + std::to_string(i % 17),
                                            writer.pick(genre.raw_labels),
                                            year,
                                            writer.lyrics(genre.theme, genre.skewed),
                                            "en"};
      biasbeam::csv::write_row(out, row);
    }
  }

  // Rows ingest must drop.
  const std::vector<std::vector<std::string>> rejects = {
      {next_id(), "noche", "x", "Pop", "2001", "bailar en la noche con el amor", "es"},
      {next_id(), "corazon", "x", "Rap", "1999", "mi corazon en la calle", "es"},
      {next_id(), "strasse", "x", "Rock", "1985", "die strasse brennt heute nacht", "de"},
      {next_id(), "empty", "x", "Country", "1990", "", "en"},
      {next_id(), "future", "x", "Pop", "2150", "dance all night", "en"},
      {"", "anonymous", "x", "Rock", "1970", "fire and thunder", "en"},
      {"song-1", "duplicate", "x", "Pop", "2010", "dance dance", "en"},
  };
  for (const auto& row : rejects) biasbeam::csv::write_row(out, row);
  return out ? 0 : 2;
}
