#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "recur/generator.hpp"

namespace recur {

/// One JSON object per line. Integers are written as decimal strings so that
/// values up to 1e100 survive any JSON reader; floats as JSON numbers.
nlohmann::json sample_to_json(const GeneratedSample& sample);
GeneratedSample sample_from_json(const nlohmann::json& j);

nlohmann::json sequence_to_json(const SequenceData& data);
SequenceData sequence_from_json(const nlohmann::json& j, Mode mode);

void write_dataset(const std::filesystem::path& path, const std::vector<GeneratedSample>& samples);
std::vector<GeneratedSample> read_dataset(const std::filesystem::path& path);

/// Histograms of operator count, effective degree and length.
struct DatasetStats {
  std::size_t count = 0;
  std::map<int, std::size_t> ops;
  std::map<int, std::size_t> degree;
  std::map<int, std::size_t> length;

  void add(const GeneratedSample& sample);
  nlohmann::json to_json() const;
  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

nlohmann::json config_to_json(const GeneratorConfig& cfg);
/// Missing keys keep their defaults.
GeneratorConfig config_from_json(const nlohmann::json& j, GeneratorConfig base = {});

}  // namespace recur
