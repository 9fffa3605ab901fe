#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "embedlab/error.hpp"
#include "embedlab/nn/tensor.hpp"

namespace embedlab::nn {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Layout: one line of JSON `{"format":"embedlab-checkpoint","version":1,
// "tensors":[{"name":..,"shape":[..]},..]}` terminated by '\n', followed by
// every tensor's data in order as little-endian IEEE-754 doubles.
inline void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
  nlohmann::ordered_json header;
  header["format"] = "embedlab-checkpoint";
  header["version"] = 1;
  header["tensors"] = nlohmann::ordered_json::array();
  for (const auto& [name, t] : tensors)
    header["tensors"].push_back({{"name", name}, {"shape", t.shape()}});

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << header.dump() << '\n';
  for (const auto& [name, t] : tensors) {
    for (double v : t.values()) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      unsigned char buf[8];
      for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
      out.write(reinterpret_cast<const char*>(buf), 8);
    }
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

inline NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("checkpoint " + path.string() + " has no header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("checkpoint header is not valid JSON: " + std::string(e.what()));
  }
  if (header.value("format", "") != "embedlab-checkpoint")
    throw Error("not an embedlab checkpoint: " + path.string());

  NamedTensors out;
  for (const auto& entry : header.at("tensors")) {
    Tensor t(entry.at("shape").get<Shape>());
    for (auto& v : t.values()) {
      unsigned char buf[8];
      if (!in.read(reinterpret_cast<char*>(buf), 8))
        throw Error("checkpoint " + path.string() + " is truncated");
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
      v = std::bit_cast<double>(bits);
    }
    out.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw Error("checkpoint " + path.string() + " has trailing bytes");
  return out;
}

}  // namespace embedlab::nn
