#include "rockfrag/sieve_csv.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <fstream>
#include <iomanip>
#include <vector>

#include "rockfrag/error.hpp"

namespace rockfrag {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
  throw InputError(source + ":" + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& field, const std::string& source, int line,
                    const char* what) {
  double v = 0.0;
  const char* b = field.data();
  const char* e = b + field.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (field.empty() || ec != std::errc() || p != e)
    fail(source, line, std::string("bad ") + what + " '" + field + "'");
  return v;
}

}  // namespace

SieveAnalysis read_sieve_csv(std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  bool fines_seen = false;
  std::optional<double> last_mesh;
  std::vector<SieveRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      fail(source, lineno, "expected two comma-separated fields");
    const auto mesh = trim(line.substr(0, comma));
    const auto mass = trim(line.substr(comma + 1));
    if (!header_seen) {
      if (mesh != "mesh_mm" || mass != "mass_kg") fail(source, lineno, "expected header mesh_mm,mass_kg");
      header_seen = true;
      continue;
    }
    SieveRecord r;
    if (mesh == "FINES") {
      if (fines_seen) fail(source, lineno, "more than one FINES row");
      fines_seen = true;
    } else {
      r.mesh_mm = parse_number(mesh, source, lineno, "mesh size");
      if (!(*r.mesh_mm > 0.0)) fail(source, lineno, "mesh size must be > 0");
      if (last_mesh && !(*r.mesh_mm > *last_mesh))
        fail(source, lineno, "mesh sizes must be strictly increasing");
      last_mesh = r.mesh_mm;
    }
    r.mass_kg = parse_number(mass, source, lineno, "mass");
    if (!(r.mass_kg >= 0.0) || !std::isfinite(r.mass_kg)) fail(source, lineno, "mass must be >= 0");
    records.push_back(r);
  }
  if (!header_seen) throw InputError(source + ": empty file");
  try {
    return SieveAnalysis(std::move(records));
  } catch (const InputError& e) {
    fail(source, lineno, e.what());
  }
}

SieveAnalysis read_sieve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return read_sieve_csv(in, path.string());
}

void write_sieve_csv(std::ostream& out, const SieveAnalysis& analysis) {
  out << "mesh_mm,mass_kg\n";
  const auto old = out.precision(17);
  for (const auto& r : analysis.records()) {
    if (r.is_fines())
      out << "FINES";
    else
      out << *r.mesh_mm;
    out << ',' << r.mass_kg << '\n';
  }
  out.precision(old);
}

}  // namespace rockfrag
