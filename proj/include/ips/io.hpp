#ifndef IPS_IO_HPP
#define IPS_IO_HPP

// File formats for distributions.
//
// Binary layout (little endian):
//   char[8]  "IPSDIST1"
//   u32      enumeration version (1: lexicographic sites, least significant site first)
//   u32      d, side, q, sites
//   u64      state count
//   f64[n]   weights

#include <cstdint>
#include <string>

#include <json.hpp>

#include "ips/lattice.hpp"

namespace ips {

inline constexpr std::uint32_t kEnumerationVersion = 1;

struct DistributionHeader {
  std::uint32_t enumeration = kEnumerationVersion;
  std::uint32_t d = 0;
  std::uint32_t side = 0;
  std::uint32_t q = 0;
  std::uint32_t sites = 0;
};

struct StoredDistribution {
  DistributionHeader header;
  Distribution dist;
};

DistributionHeader header_for(const Volume& volume);

void write_distribution(const std::string& path, const Distribution& dist, const Volume& volume);
StoredDistribution read_distribution(const std::string& path);

/// {"enumeration":1,"d":..,"side":..,"q":..,"sites":..,"weights":[...]};
/// refused above 2^16 states.
nlohmann::json distribution_to_json(const Distribution& dist, const Volume& volume);
StoredDistribution distribution_from_json(const nlohmann::json& j);

/// Shortest decimal form that round-trips; "inf", "-inf", "nan" otherwise.
std::string format_real(double v);

/// Write to `path` through a temporary file and rename, so readers never see
/// a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace ips

#endif  // IPS_IO_HPP
