#include "treecode/image_io.hpp"

#include <cctype>
#include <fstream>

namespace treecode {

namespace {

// Reads the next PGM header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

int parse_header_int(std::istream& in, const std::string& path, const char* what) {
  const std::string tok = next_token(in);
  if (tok.empty()) throw IoError(path + ": truncated PGM header");
  for (char c : tok) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw IoError(path + ": malformed PGM " + what);
    }
  }
  return std::stoi(tok);
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  if (next_token(in) != "P5") throw IoError(path + ": not a binary PGM (P5)");

  GrayImage img;
  img.width = parse_header_int(in, path, "width");
  img.height = parse_header_int(in, path, "height");
  const int maxval = parse_header_int(in, path, "maxval");
  if (maxval <= 0 || maxval > 255) throw IoError(path + ": only 8-bit PGM is supported");
  if (img.width <= 0 || img.height <= 0) throw IoError(path + ": bad dimensions");

  const size_t count = static_cast<size_t>(img.width) * img.height;
  std::vector<unsigned char> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
  if (static_cast<size_t>(in.gcount()) != count) throw IoError(path + ": truncated pixel data");

  img.pixels.resize(count);
  for (size_t i = 0; i < count; ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::min(1.0, std::max(0.0, img.pixels[i]));
    raw[i] = static_cast<unsigned char>(v * 255.0 + 0.5);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace treecode
