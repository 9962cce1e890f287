#include "fedssta/pgm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace fedssta {

namespace {

// skips whitespace and '#' comment lines between header tokens
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Frame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path.string());
  std::string magic = next_token(in);
  if (magic != "P5") {
    throw std::runtime_error("pgm: " + path.string() + " is not binary P5 (got '" +
                             magic + "')");
  }
  auto read_uint = [&](const char* what) {
    std::string t = next_token(in);
    if (t.empty()) throw std::runtime_error(std::string("pgm: truncated header, missing ") + what);
    return std::stoull(t);
  };
  std::size_t w = read_uint("width");
  std::size_t h = read_uint("height");
  std::size_t maxval = read_uint("maxval");
  if (w == 0 || h == 0) throw std::runtime_error("pgm: zero dimension in " + path.string());
  if (maxval != 255) {
    throw std::runtime_error("pgm: only maxval 255 supported, got " +
                             std::to_string(maxval) + " in " + path.string());
  }
  Frame f = Frame::zeros(h, w);
  std::vector<unsigned char> raw(h * w);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw std::runtime_error("pgm: truncated pixel data in " + path.string());
  }
  for (std::size_t i = 0; i < raw.size(); ++i) f.data[i] = raw[i] / 255.0;
  return f;
}

void write_pgm(const std::filesystem::path& path, const Frame& frame) {
  if (frame.channels != 1) {
    throw std::invalid_argument("pgm: only single-channel frames can be written, got " +
                                std::to_string(frame.channels) + " channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot write " + path.string());
  out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
  std::vector<unsigned char> raw(frame.pixels());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double v = std::clamp(frame.data[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("pgm: write failed for " + path.string());
}

}  // namespace fedssta
