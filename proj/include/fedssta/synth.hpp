#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "fedssta/rng.hpp"
#include "fedssta/ssta.hpp"

namespace fedssta {

struct ScenarioConfig {
  std::size_t participants = 42;  // training participants
  std::size_t operators = 5;
  std::size_t sequences_per_class = 40;
  std::size_t test_trained_participants = 6;
  std::size_t test_untrained_participants = 6;
  std::size_t test_sequences_per_class = 10;
  double noise_sigma = 0.02;
  double heterogeneity = 1.0;  // scales participant appearance spread
  std::vector<std::size_t> corrupt_operators;  // 1-based operator ids
  double label_flip_probability = 1.0;
  double validation_fraction = 0.2;

  void validate() const;
};

// Appearance parameters of one simulated participant. Drawn once per
// participant from a child stream, so any sequence of theirs can be
// regenerated independently.
struct ParticipantProfile {
  std::size_t id = 0;
  double background = 0.2;
  double center_y = 0.5, center_x = 0.5;  // fractions of frame size
  double sigma = 0.18;                    // fraction of min(frame dims)
  double amplitude = 0.55;                // blob peak above background
  double decay = 0.25;                    // drowsy per-frame amplitude decay
};

ParticipantProfile make_participant(std::size_t id, double heterogeneity,
                                    const Rng& master);

// Class 0 (alert): blob amplitude constant across frames. Class 1 (drowsy):
// amplitude decays geometrically, so frame 0 looks the same for both classes
// and only the temporal profile separates them.
FrameSequence gen_sequence(const ParticipantProfile& profile, std::size_t cls,
                           std::size_t seq_index, const SstaConfig& model,
                           double noise_sigma, const Rng& master);

// Shuffles participant ids and deals them to T operators, spreading the
// remainder over the first operators. Returns a 1-based operator id per
// participant.
std::vector<int> partition(std::size_t n_participants, std::size_t n_operators, Rng rng);

// Flips each label with the given probability (binary: 0 <-> 1).
// Returns how many labels were flipped.
std::size_t corrupt_labels(std::vector<FrameSequence*>& shard, double flip_probability,
                           Rng rng);

struct SequenceMeta {
  std::size_t participant = 0;
  int operator_id = -1;  // -1 for test shards
  std::size_t cls = 0;   // generated class
  std::size_t label = 0; // training label (differs from cls when corrupted)
  std::size_t index = 0;
};

struct SynthDataset {
  std::vector<FrameSequence> train;
  std::vector<SequenceMeta> train_meta;
  std::vector<FrameSequence> test_trained;
  std::vector<SequenceMeta> test_trained_meta;
  std::vector<FrameSequence> test_untrained;
  std::vector<SequenceMeta> test_untrained_meta;
};

// Full dataset build: participants, partition, test shards (extra sequences
// from designated trained participants plus disjoint untrained ones), label
// corruption for the configured operators.
SynthDataset generate_dataset(const ScenarioConfig& scenario, const SstaConfig& model,
                              const Rng& master);

// Directory of PGM frames plus a manifest CSV (one row per frame).
void export_dataset(const std::filesystem::path& dir, const SynthDataset& dataset);
SynthDataset import_dataset(const std::filesystem::path& dir, const SstaConfig& model);

}  // namespace fedssta
