#include "fedssta/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "fedssta/pgm.hpp"
#include "fedssta/textio.hpp"

namespace fedssta {

void ScenarioConfig::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("scenario: ") + msg);
  };
  need(participants >= 1, "participants must be >= 1");
  need(operators >= 1, "operators must be >= 1");
  need(operators <= participants, "operators must not exceed participants");
  need(operators <= 63, "operators must be <= 63 (valid-set bitmask width)");
  need(sequences_per_class >= 1, "sequences_per_class must be >= 1");
  need(test_trained_participants <= participants,
       "test_trained_participants must not exceed participants");
  need(noise_sigma >= 0.0, "noise_sigma must be >= 0");
  need(heterogeneity >= 0.0, "heterogeneity must be >= 0");
  need(label_flip_probability >= 0.0 && label_flip_probability <= 1.0,
       "label_flip_probability must be in [0, 1]");
  need(validation_fraction >= 0.0 && validation_fraction < 1.0,
       "validation_fraction must be in [0, 1)");
  for (std::size_t op : corrupt_operators) {
    need(op >= 1 && op <= operators, "corrupt_operators entries must be valid operator ids");
  }
}

ParticipantProfile make_participant(std::size_t id, double heterogeneity,
                                    const Rng& master) {
  Rng rng = master.child("participant", id);
  ParticipantProfile p;
  p.id = id;
  double h = heterogeneity;
  p.background = std::clamp(0.20 + 0.08 * h * rng.uniform(-1.0, 1.0), 0.02, 0.45);
  p.center_y = 0.5 + 0.15 * h * rng.uniform(-1.0, 1.0);
  p.center_x = 0.5 + 0.15 * h * rng.uniform(-1.0, 1.0);
  p.sigma = std::max(0.06, 0.18 + 0.05 * h * rng.uniform(-1.0, 1.0));
  p.amplitude = std::clamp(0.55 + 0.12 * h * rng.uniform(-1.0, 1.0), 0.2, 0.78);
  p.decay = std::clamp(0.25 + 0.08 * h * rng.uniform(-1.0, 1.0), 0.08, 0.45);
  return p;
}

FrameSequence gen_sequence(const ParticipantProfile& profile, std::size_t cls,
                           std::size_t seq_index, const SstaConfig& model,
                           double noise_sigma, const Rng& master) {
  if (cls >= model.classes) {
    throw std::invalid_argument("gen_sequence: class " + std::to_string(cls) +
                                " out of range for " + std::to_string(model.classes) +
                                " classes");
  }
  Rng rng = master.child("seq", profile.id, cls, seq_index);
  const std::size_t H = model.frame_height, W = model.frame_width;
  const double mind = static_cast<double>(std::min(H, W));
  // per-sequence jitter keeps sequences of one participant from being clones
  double cy = (profile.center_y + 0.02 * rng.uniform(-1.0, 1.0)) * (static_cast<double>(H) - 1.0);
  double cx = (profile.center_x + 0.02 * rng.uniform(-1.0, 1.0)) * (static_cast<double>(W) - 1.0);
  double sigma = profile.sigma * mind;
  double amp = profile.amplitude * (1.0 + 0.05 * rng.uniform(-1.0, 1.0));

  FrameSequence seq;
  seq.one_hot = FrameSequence::make_one_hot(cls, model.classes);
  seq.frames.reserve(model.sequence_length);
  for (std::size_t k = 0; k < model.sequence_length; ++k) {
    double ak = amp;
    if (cls == 1) ak = amp * std::pow(1.0 - profile.decay, static_cast<double>(k));
    Frame f = Frame::zeros(H, W);
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        double dy = static_cast<double>(y) - cy;
        double dx = static_cast<double>(x) - cx;
        double v = profile.background +
                   ak * std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
        if (noise_sigma > 0.0) v += rng.normal(0.0, noise_sigma);
        f.at(y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

std::vector<int> partition(std::size_t n_participants, std::size_t n_operators, Rng rng) {
  if (n_operators == 0) throw std::invalid_argument("partition: need at least one operator");
  if (n_participants < n_operators) {
    throw std::invalid_argument("partition: " + std::to_string(n_participants) +
                                " participants cannot cover " + std::to_string(n_operators) +
                                " operators");
  }
  std::vector<std::size_t> ids(n_participants);
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(ids);
  std::vector<int> op_of(n_participants, 0);
  std::size_t base = n_participants / n_operators;
  std::size_t extra = n_participants % n_operators;
  std::size_t pos = 0;
  for (std::size_t t = 0; t < n_operators; ++t) {
    std::size_t take = base + (t < extra ? 1 : 0);
    for (std::size_t i = 0; i < take; ++i) op_of[ids[pos++]] = static_cast<int>(t + 1);
  }
  return op_of;
}

std::size_t corrupt_labels(std::vector<FrameSequence*>& shard, double flip_probability,
                           Rng rng) {
  if (flip_probability < 0.0 || flip_probability > 1.0) {
    throw std::invalid_argument("corrupt_labels: probability must be in [0, 1]");
  }
  std::size_t flipped = 0;
  for (FrameSequence* s : shard) {
    if (rng.uniform01() < flip_probability) {
      std::size_t classes = s->one_hot.size();
      std::size_t old = s->label();
      s->one_hot = FrameSequence::make_one_hot((old + 1) % classes, classes);
      ++flipped;
    }
  }
  return flipped;
}

SynthDataset generate_dataset(const ScenarioConfig& scenario, const SstaConfig& model,
                              const Rng& master) {
  scenario.validate();
  model.validate();
  SynthDataset ds;

  std::vector<int> op_of =
      partition(scenario.participants, scenario.operators, master.child("partition"));

  // designated trained-test participants: deterministic draw without
  // replacement
  std::vector<std::size_t> ids(scenario.participants);
  std::iota(ids.begin(), ids.end(), 0);
  {
    Rng r = master.child("test_trained");
    r.shuffle(ids);
  }
  std::vector<bool> is_test_trained(scenario.participants, false);
  for (std::size_t i = 0; i < scenario.test_trained_participants; ++i)
    is_test_trained[ids[i]] = true;

  for (std::size_t p = 0; p < scenario.participants; ++p) {
    ParticipantProfile prof = make_participant(p, scenario.heterogeneity, master);
    for (std::size_t cls = 0; cls < model.classes; ++cls) {
      for (std::size_t i = 0; i < scenario.sequences_per_class; ++i) {
        ds.train.push_back(gen_sequence(prof, cls, i, model, scenario.noise_sigma, master));
        ds.train_meta.push_back({p, op_of[p], cls, cls, i});
      }
      if (is_test_trained[p]) {
        for (std::size_t i = 0; i < scenario.test_sequences_per_class; ++i) {
          std::size_t idx = scenario.sequences_per_class + i;  // disjoint from training draws
          ds.test_trained.push_back(
              gen_sequence(prof, cls, idx, model, scenario.noise_sigma, master));
          ds.test_trained_meta.push_back({p, -1, cls, cls, idx});
        }
      }
    }
  }

  for (std::size_t u = 0; u < scenario.test_untrained_participants; ++u) {
    std::size_t pid = scenario.participants + u;
    ParticipantProfile prof = make_participant(pid, scenario.heterogeneity, master);
    for (std::size_t cls = 0; cls < model.classes; ++cls) {
      for (std::size_t i = 0; i < scenario.test_sequences_per_class; ++i) {
        ds.test_untrained.push_back(
            gen_sequence(prof, cls, i, model, scenario.noise_sigma, master));
        ds.test_untrained_meta.push_back({pid, -1, cls, cls, i});
      }
    }
  }

  // label corruption, per configured operator
  for (std::size_t op : scenario.corrupt_operators) {
    std::vector<FrameSequence*> shard;
    std::vector<std::size_t> shard_idx;
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
      if (ds.train_meta[i].operator_id == static_cast<int>(op)) {
        shard.push_back(&ds.train[i]);
        shard_idx.push_back(i);
      }
    }
    corrupt_labels(shard, scenario.label_flip_probability, master.child("corrupt", op));
    for (std::size_t i : shard_idx) ds.train_meta[i].label = ds.train[i].label();
  }

  return ds;
}

namespace {

void export_shard(const std::filesystem::path& dir, const char* shard,
                  const std::vector<FrameSequence>& seqs,
                  const std::vector<SequenceMeta>& meta, std::string& manifest) {
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const SequenceMeta& m = meta[i];
    for (std::size_t k = 0; k < seqs[i].frames.size(); ++k) {
      std::string name = std::string(shard) + "_p" + std::to_string(m.participant) + "_c" +
                         std::to_string(m.cls) + "_s" + std::to_string(m.index) + "_f" +
                         std::to_string(k) + ".pgm";
      write_pgm(dir / "frames" / name, seqs[i].frames[k]);
      manifest += std::string(shard) + "," + std::to_string(m.participant) + "," +
                  std::to_string(m.operator_id) + "," + std::to_string(m.cls) + "," +
                  std::to_string(m.label) + "," + std::to_string(m.index) + "," +
                  std::to_string(k) + ",frames/" + name + "\n";
    }
  }
}

}  // namespace

void export_dataset(const std::filesystem::path& dir, const SynthDataset& dataset) {
  std::filesystem::create_directories(dir / "frames");
  std::string manifest = "shard,participant,operator,class,label,sequence,frame,file\n";
  export_shard(dir, "train", dataset.train, dataset.train_meta, manifest);
  export_shard(dir, "test_trained", dataset.test_trained, dataset.test_trained_meta, manifest);
  export_shard(dir, "test_untrained", dataset.test_untrained, dataset.test_untrained_meta,
               manifest);
  write_text_file(dir / "manifest.csv", manifest);
}

SynthDataset import_dataset(const std::filesystem::path& dir, const SstaConfig& model) {
  std::string text = read_text_file(dir / "manifest.csv");
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset manifest is empty");
  if (line != "shard,participant,operator,class,label,sequence,frame,file") {
    throw std::runtime_error("dataset manifest has unexpected header: " + line);
  }

  struct Key {
    std::string shard;
    std::size_t participant, cls, index;
    bool operator<(const Key& o) const {
      return std::tie(shard, participant, cls, index) <
             std::tie(o.shard, o.participant, o.cls, o.index);
    }
  };
  struct Entry {
    SequenceMeta meta;
    std::map<std::size_t, Frame> frames;
  };
  std::map<Key, Entry> groups;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      f.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
    if (f.size() != 8) {
      throw std::runtime_error("dataset manifest line " + std::to_string(lineno) +
                               ": expected 8 fields, got " + std::to_string(f.size()));
    }
    Key key{f[0], std::stoull(f[1]), std::stoull(f[3]), std::stoull(f[5])};
    Entry& e = groups[key];
    e.meta.participant = key.participant;
    e.meta.operator_id = std::stoi(f[2]);
    e.meta.cls = key.cls;
    e.meta.label = std::stoull(f[4]);
    e.meta.index = key.index;
    e.frames[std::stoull(f[6])] = read_pgm(dir / f[7]);
  }

  SynthDataset ds;
  for (auto& [key, e] : groups) {
    FrameSequence seq;
    seq.one_hot = FrameSequence::make_one_hot(e.meta.label, model.classes);
    for (auto& [k, frame] : e.frames) {
      if (frame.height != model.frame_height || frame.width != model.frame_width) {
        throw std::runtime_error("dataset frame size mismatch for participant " +
                                 std::to_string(e.meta.participant));
      }
      seq.frames.push_back(std::move(frame));
    }
    if (seq.frames.size() != model.sequence_length) {
      throw std::runtime_error("dataset sequence length mismatch for participant " +
                               std::to_string(e.meta.participant) + " (got " +
                               std::to_string(seq.frames.size()) + ")");
    }
    if (key.shard == "train") {
      ds.train.push_back(std::move(seq));
      ds.train_meta.push_back(e.meta);
    } else if (key.shard == "test_trained") {
      ds.test_trained.push_back(std::move(seq));
      ds.test_trained_meta.push_back(e.meta);
    } else if (key.shard == "test_untrained") {
      ds.test_untrained.push_back(std::move(seq));
      ds.test_untrained_meta.push_back(e.meta);
    } else {
      throw std::runtime_error("dataset manifest: unknown shard '" + key.shard + "'");
    }
  }
  return ds;
}

}  // namespace fedssta
