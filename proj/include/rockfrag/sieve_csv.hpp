#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "rockfrag/distribution.hpp"

namespace rockfrag {

/// Reads `mesh_mm,mass_kg` rows; the fines pan row carries the token FINES.
/// Errors are InputError with a 1-based line number in the message.
SieveAnalysis read_sieve_csv(std::istream& in, const std::string& source = "sieve csv");
SieveAnalysis read_sieve_csv(const std::filesystem::path& path);

void write_sieve_csv(std::ostream& out, const SieveAnalysis& analysis);

}  // namespace rockfrag
