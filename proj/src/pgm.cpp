#include "rockfrag/pgm.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "rockfrag/error.hpp"

namespace rockfrag {

namespace {

int read_header_int(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == EOF) throw InputError("pgm: truncated header");
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else {
      break;
    }
  }
  int v = 0;
  if (!(in >> v)) throw InputError("pgm: malformed header");
  return v;
}

}  // namespace

GrayImage read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw InputError("pgm: not a binary P5 file");
  const int w = read_header_int(in);
  const int h = read_header_int(in);
  const int maxval = read_header_int(in);
  if (w <= 0 || h <= 0) throw InputError("pgm: invalid dimensions");
  if (maxval <= 0 || maxval > 255) throw InputError("pgm: only 8-bit images are supported");
  in.get();  // single whitespace byte before the raster
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
    throw InputError("pgm: truncated raster");
  if (maxval != 255)
    for (auto& p : pixels) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
  return GrayImage(w, h, std::move(pixels));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image " + path.string());
  try {
    return read_pgm(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size()));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write image " + path.string());
  write_pgm(out, img);
}

}  // namespace rockfrag
