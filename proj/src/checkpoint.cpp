#include "fedssta/checkpoint.hpp"

#include <json.hpp>

#include "fedssta/config.hpp"
#include "fedssta/textio.hpp"

namespace fedssta {

using nlohmann::json;

void save_checkpoint(const std::filesystem::path& path, const SstaParams& params) {
  std::vector<double> flat = params.flatten();
  std::string weights_text;
  weights_text.reserve(flat.size() * 20);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (i) weights_text += ' ';
    weights_text += format_g17(flat[i]);
  }
  json j;
  j["format_version"] = kCheckpointVersion;
  j["model"] = model_config_to_json(params.cfg);
  j["weights"] = weights_text;
  j["checksum"] = fnv1a64_bytes(weights_text);
  write_text_file(path, j.dump(2) + "\n");
}

SstaParams load_checkpoint(const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path));
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw std::runtime_error("checkpoint: missing format_version in " + path.string());
  }
  int ver = j["format_version"].get<int>();
  if (ver != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported format_version " + std::to_string(ver) +
                             " in " + path.string() + ", expected " +
                             std::to_string(kCheckpointVersion));
  }
  SstaConfig cfg = model_config_from_json(j.at("model"), "model");
  std::string weights_text = j.at("weights").get<std::string>();
  auto stored_sum = j.at("checksum").get<std::uint64_t>();
  if (fnv1a64_bytes(weights_text) != stored_sum) {
    throw std::runtime_error("checkpoint: checksum mismatch in " + path.string() +
                             ", file is corrupt");
  }
  std::vector<double> flat;
  flat.reserve(cfg.param_count());
  std::size_t pos = 0;
  while (pos < weights_text.size()) {
    std::size_t next = weights_text.find(' ', pos);
    if (next == std::string::npos) next = weights_text.size();
    flat.push_back(std::stod(weights_text.substr(pos, next - pos)));
    pos = next + 1;
  }
  return SstaParams::unflatten(cfg, flat);
}

}  // namespace fedssta
