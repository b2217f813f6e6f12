#include "ips/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ips {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'I', 'P', 'S', 'D', 'I', 'S', 'T', '1'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw InvalidArgument("truncated distribution file");
  return v;
}

}  // namespace

DistributionHeader header_for(const Volume& volume) {
  DistributionHeader h;
  h.d = static_cast<std::uint32_t>(volume.dimension());
  h.side = static_cast<std::uint32_t>(volume.side());
  h.q = static_cast<std::uint32_t>(volume.q());
  h.sites = static_cast<std::uint32_t>(volume.site_count());
  return h;
}

void write_distribution(const std::string& path, const Distribution& dist, const Volume& volume) {
  if (dist.q() != volume.q() || dist.sites() != volume.site_count())
    throw InvalidArgument("distribution does not live on this volume");
  const auto h = header_for(volume);
  std::string out(kMagic, sizeof kMagic);
  put(out, h.enumeration);
  put(out, h.d);
  put(out, h.side);
  put(out, h.q);
  put(out, h.sites);
  put(out, static_cast<std::uint64_t>(dist.size()));
  out.append(reinterpret_cast<const char*>(dist.weights().data()), dist.size() * sizeof(double));
  write_file_atomic(path, out);
}

StoredDistribution read_distribution(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open distribution file '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw InvalidArgument("not a distribution file: " + path);
  DistributionHeader h;
  h.enumeration = get<std::uint32_t>(in);
  if (h.enumeration != kEnumerationVersion)
    throw InvalidArgument("unsupported enumeration version " + std::to_string(h.enumeration));
  h.d = get<std::uint32_t>(in);
  h.side = get<std::uint32_t>(in);
  h.q = get<std::uint32_t>(in);
  h.sites = get<std::uint32_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (count != checked_state_count(static_cast<int>(h.q), static_cast<int>(h.sites)))
    throw InvalidArgument("distribution file state count does not match its header");
  Eigen::VectorXd w(static_cast<Eigen::Index>(count));
  if (!in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(count * sizeof(double))))
    throw InvalidArgument("truncated distribution file");
  return {h, Distribution(static_cast<int>(h.q), static_cast<int>(h.sites), std::move(w))};
}

nlohmann::json distribution_to_json(const Distribution& dist, const Volume& volume) {
  if (dist.size() > (StateIndex{1} << 16)) throw InfeasibleSize("JSON export is limited to 2^16 states");
  const auto h = header_for(volume);
  nlohmann::json j;
  j["enumeration"] = h.enumeration;
  j["d"] = h.d;
  j["side"] = h.side;
  j["q"] = h.q;
  j["sites"] = h.sites;
  j["weights"] = std::vector<double>(dist.weights().data(), dist.weights().data() + dist.size());
  return j;
}

StoredDistribution distribution_from_json(const nlohmann::json& j) {
  DistributionHeader h;
  try {
    h.enumeration = j.at("enumeration").get<std::uint32_t>();
    h.d = j.at("d").get<std::uint32_t>();
    h.side = j.at("side").get<std::uint32_t>();
    h.q = j.at("q").get<std::uint32_t>();
    h.sites = j.at("sites").get<std::uint32_t>();
    if (h.enumeration != kEnumerationVersion) throw InvalidArgument("unsupported enumeration version");
    const auto w = j.at("weights").get<std::vector<double>>();
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return {h, Distribution(static_cast<int>(h.q), static_cast<int>(h.sites), std::move(v))};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed distribution JSON: ") + e.what());
  }
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const auto tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace ips
