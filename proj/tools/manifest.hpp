#pragma once

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lightfdg::tools {

inline std::string sha256_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  return hex.str();
}

struct RunManifest {
  std::string command;
  std::string scenario;
  std::vector<std::string> policies;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> files;  // relative to out_dir

  // Written last; every listed file is digested as it is on disk now.
  void write() const {
    nlohmann::json inventory = nlohmann::json::array();
    for (const auto& f : files) {
      const auto full = out_dir / f;
      inventory.push_back({{"path", f.generic_string()},
                           {"bytes", std::filesystem::file_size(full)},
                           {"sha256", sha256_file(full)}});
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    nlohmann::json j = {{"command", command},   {"scenario", scenario}, {"policies", policies},
                        {"seeds", seeds},       {"output_dir", out_dir.string()},
                        {"created", ts.str()}, {"files", inventory}};
    std::ofstream out(out_dir / "manifest.json");
    out << j.dump(2) << '\n';
  }
};

}  // namespace lightfdg::tools
