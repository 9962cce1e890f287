#include "fedssta/prep.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "fedssta/face.hpp"
#include "fedssta/pgm.hpp"
#include "fedssta/textio.hpp"

namespace fedssta {

using nlohmann::json;

namespace {

struct HogConfigFile {
  HogConfig hog;
  std::optional<Rect> face_rect;
};

HogConfigFile parse_hog_config_file(const std::filesystem::path& path) {
  HogConfigFile out;
  if (path.empty()) return out;
  json j = json::parse(read_text_file(path));
  if (!j.is_object()) throw std::invalid_argument("hog config: expected an object");
  for (auto& [key, value] : j.items()) {
    if (key == "cell_size") out.hog.cell_size = value.get<std::size_t>();
    else if (key == "bins") out.hog.bins = value.get<std::size_t>();
    else if (key == "block_cells") out.hog.block_cells = value.get<std::size_t>();
    else if (key == "block_stride") out.hog.block_stride = value.get<std::size_t>();
    else if (key == "eta") out.hog.eta = value.get<double>();
    else if (key == "signed_orientation") out.hog.signed_orientation = value.get<bool>();
    else if (key == "face_rect") {
      if (!value.is_array() || value.size() != 4) {
        throw std::invalid_argument("hog config: face_rect must be [y, x, height, width]");
      }
      out.face_rect = Rect{value[0].get<std::size_t>(), value[1].get<std::size_t>(),
                           value[2].get<std::size_t>(), value[3].get<std::size_t>()};
    } else {
      throw std::invalid_argument("hog config: unknown key '" + key + "'");
    }
  }
  out.hog.validate();
  return out;
}

}  // namespace

HogConfig parse_hog_config(const std::filesystem::path& path) {
  return parse_hog_config_file(path).hog;
}

std::vector<AugmentOp> parse_augment_spec(const std::filesystem::path& path) {
  if (path.empty()) return {};
  json j = json::parse(read_text_file(path));
  if (!j.is_array()) throw std::invalid_argument("augment spec: expected a JSON array");
  std::vector<AugmentOp> ops;
  for (const json& e : j) {
    if (!e.is_object() || !e.contains("kind")) {
      throw std::invalid_argument("augment spec: each op needs a 'kind'");
    }
    std::string kind = e.at("kind").get<std::string>();
    auto param = [&](const char* name) {
      if (!e.contains(name)) {
        throw std::invalid_argument("augment spec: op '" + kind + "' needs '" + name + "'");
      }
      return e.at(name).get<double>();
    };
    if (kind == "identity") ops.push_back(AugmentOp::identity());
    else if (kind == "horizontal_flip") ops.push_back(AugmentOp::horizontal_flip());
    else if (kind == "rotate") ops.push_back(AugmentOp::rotate(param("angle")));
    else if (kind == "brightness") ops.push_back(AugmentOp::brightness(param("offset")));
    else if (kind == "zoom") ops.push_back(AugmentOp::zoom(param("factor")));
    else throw std::invalid_argument("augment spec: unknown kind '" + kind + "'");
    for (auto& [key, value] : e.items()) {
      (void)value;
      if (key != "kind" && key != "angle" && key != "offset" && key != "factor") {
        throw std::invalid_argument("augment spec: unknown key '" + key + "'");
      }
    }
  }
  return ops;
}

PrepStats run_prep(const PrepOptions& opts) {
  HogConfigFile cfg = parse_hog_config_file(opts.hog_config);
  std::vector<AugmentOp> ops = parse_augment_spec(opts.augment_spec);

  if (!std::filesystem::is_directory(opts.in_dir)) {
    throw std::runtime_error("prep: input directory " + opts.in_dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> inputs;
  for (const auto& entry : std::filesystem::directory_iterator(opts.in_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      inputs.push_back(entry.path());
    }
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty()) {
    throw std::runtime_error("prep: no .pgm frames in " + opts.in_dir.string());
  }

  std::filesystem::create_directories(opts.out_dir / "frames");

  FullFrameDetector full;
  std::optional<FixedRectDetector> fixed;
  if (cfg.face_rect) fixed.emplace(*cfg.face_rect);
  const FaceDetector& detector =
      fixed ? static_cast<const FaceDetector&>(*fixed) : static_cast<const FaceDetector&>(full);

  PrepStats stats;
  std::string descriptors;
  std::string manifest = "input,op,output,descriptor_row\n";
  std::size_t row = 0;

  for (const auto& in_path : inputs) {
    ++stats.frames_in;
    Frame frame;
    try {
      frame = read_pgm(in_path);
    } catch (const std::exception& e) {
      ++stats.frames_skipped;
      stats.warnings.push_back("skipping " + in_path.filename().string() + ": " + e.what());
      continue;
    }
    std::optional<Frame> face = crop_face(frame, detector);
    if (!face) {
      ++stats.frames_skipped;
      stats.warnings.push_back("skipping " + in_path.filename().string() + ": no face detected");
      continue;
    }
    std::vector<Frame> images = augment(*face, ops);
    for (std::size_t z = 0; z < images.size(); ++z) {
      std::string op_name = (z == 0) ? "original" : ops[z - 1].name();
      std::string out_name = in_path.stem().string() + "_z" + std::to_string(z) + ".pgm";
      write_pgm(opts.out_dir / "frames" / out_name, images[z]);
      HogDescriptor d = hog_descriptor(images[z], cfg.hog);
      std::vector<std::string> fields;
      fields.reserve(d.values.size());
      for (double v : d.values) fields.push_back(format_g17(v));
      descriptors += join_csv(fields) + "\n";
      manifest += in_path.filename().string() + "," + op_name + ",frames/" + out_name + "," +
                  std::to_string(row) + "\n";
      ++row;
      ++stats.images_out;
    }
  }

  if (stats.images_out == 0) {
    throw std::runtime_error("prep: no readable frames in " + opts.in_dir.string());
  }
  write_text_file(opts.out_dir / "descriptors.csv", descriptors);
  write_text_file(opts.out_dir / "manifest.csv", manifest);
  return stats;
}

}  // namespace fedssta
