#pragma once

// Fixtures, random generators and oracles shared by the test binaries.

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mared/keyframe_distiller.hpp"
#include "mared/model.hpp"
#include "mared/playback.hpp"
#include "mared/semantic_logger.hpp"

namespace mared::testing {

// Drone tutorial: "drone principles" [0,10] then "drone assembly" [10,20];
// the instructor gazes at the table, powers the drone, grasps and releases
// it. Keyframes at 5, 10 and 15 for threshold 0.5.
RawCapture drone_capture();
MaredDocument drone_document();
KeyframedDocument drone_keyframed(double theta = 0.5);
// One spoken question at wall time 4.
std::vector<InteractionInput> drone_question_trace();

// Two users move a cup from a table to a shelf and hand over a tool; no
// segment markers, so segments come from gap clustering.
RawCapture workshop_capture();
MaredDocument workshop_document();
KeyframedDocument workshop_keyframed(double theta = 0.3);

struct NamedFixture {
  std::string name;
  KeyframedDocument kdoc;
};
std::vector<NamedFixture> all_fixtures();

// Directory holding the checked-in fixture files.
std::string fixture_dir();
std::string read_file(const std::string& path);

// Valid random document with at most `max_events` events in total.
MaredDocument random_document(std::mt19937_64& rng, int max_events = 50);
std::vector<InteractionInput> random_trace(std::mt19937_64& rng, double horizon,
                                           int max_inputs = 8);

// Brute-force keyframe filter: every distinct candidate instant, its
// significance by scanning all events, groups by transitive closure of the
// merge window, then the threshold rule. Returns (t, score) pairs.
std::vector<std::pair<double, double>> naive_keyframes(const MaredDocument& doc,
                                                       double theta,
                                                       const ScoringWeights& w = {});

}  // namespace mared::testing
