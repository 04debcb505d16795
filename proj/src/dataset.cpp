#include "recur/dataset.hpp"

#include <fstream>

namespace recur {

using nlohmann::json;

json sequence_to_json(const SequenceData& data) {
  json out = json::array();
  if (const auto* ints = std::get_if<IntTracks>(&data)) {
    for (const auto& track : *ints) {
      json t = json::array();
      for (const auto& v : track) {
        t.push_back(to_string(v));
      }
      out.push_back(std::move(t));
    }
  } else {
    for (const auto& track : std::get<RealTracks>(data)) {
      out.push_back(track);
    }
  }
  return out;
}

SequenceData sequence_from_json(const json& j, Mode mode) {
  if (mode == Mode::integer) {
    IntTracks tracks;
    for (const auto& t : j) {
      auto& track = tracks.emplace_back();
      for (const auto& v : t) {
        auto parsed = parse_bigint(v.is_string() ? v.get<std::string>() : v.dump());
        if (!parsed) {
          throw std::invalid_argument("bad integer term " + v.dump());
        }
        track.push_back(std::move(*parsed));
      }
    }
    return tracks;
  }
  return j.get<RealTracks>();
}

json sample_to_json(const GeneratedSample& s) {
  json j;
  j["mode"] = mode_name(s.relation.mode());
  j["relation"] = to_text(s.relation);
  j["initial"] = sequence_to_json(slice(s.terms, 0, static_cast<std::size_t>(s.degree)));
  j["terms"] = sequence_to_json(s.terms);
  if (length(s.future) > 0) {
    j["future"] = sequence_to_json(s.future);
  }
  j["o"] = s.ops;
  j["d_eff"] = s.degree;
  j["l"] = s.length;
  j["seed"] = s.seed;
  if (s.noisy) {
    j["sigma"] = s.sigma;
    j["noisy"] = *s.noisy;
  }
  return j;
}

GeneratedSample sample_from_json(const json& j) {
  const Mode mode = parse_mode(j.at("mode").get<std::string>());
  RecurrenceRelation rel = parse_relation(j.at("relation").get<std::string>(), mode);
  GeneratedSample s{.relation = std::move(rel), .terms = sequence_from_json(j.at("terms"), mode)};
  s.future = j.contains("future") ? sequence_from_json(j.at("future"), mode)
                                  : slice(s.terms, 0, 0);
  s.ops = j.value("o", s.relation.operator_count());
  s.degree = j.value("d_eff", s.relation.degree());
  s.length = j.value("l", static_cast<int>(length(s.terms)) - s.degree);
  s.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("noisy")) {
    s.noisy = j.at("noisy").get<RealTracks>();
    s.sigma = j.value("sigma", 0.0);
  }
  return s;
}

void write_dataset(const std::filesystem::path& path, const std::vector<GeneratedSample>& samples) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  for (const auto& s : samples) {
    out << sample_to_json(s).dump() << '\n';
  }
}

std::vector<GeneratedSample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::vector<GeneratedSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      out.push_back(sample_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void DatasetStats::add(const GeneratedSample& s) {
  ++count;
  ++ops[s.ops];
  ++degree[s.degree];
  ++length[s.length];
}

json DatasetStats::to_json() const {
  auto hist = [](const std::map<int, std::size_t>& m) {
    json h = json::object();
    for (const auto& [k, v] : m) {
      h[std::to_string(k)] = v;
    }
    return h;
  };
  return {{"count", count}, {"o", hist(ops)}, {"d_eff", hist(degree)}, {"l", hist(length)}};
}

json config_to_json(const GeneratorConfig& c) {
  return {
      {"mode", mode_name(c.mode)},
      {"min_ops", c.min_ops},
      {"max_ops", c.max_ops},
      {"max_degree", c.max_degree},
      {"min_length", c.min_length},
      {"max_length", c.max_length},
      {"p_const", c.p_const},
      {"p_index", c.p_index},
      {"p_var", c.p_var},
      {"init_low", c.init_low},
      {"init_high", c.init_high},
      {"const_low", c.const_low},
      {"const_high", c.const_high},
      {"named_constants", c.named_constants},
      {"real_prefactors", c.real_prefactors},
      {"noise_leaf_prob", c.noise_leaf_prob},
      {"dimensions", c.dimensions},
      {"family", family_name(c.family)},
      {"extra_terms", c.extra_terms},
      {"max_attempts", c.max_attempts},
  };
}

GeneratorConfig config_from_json(const json& j, GeneratorConfig c) {
  if (j.contains("mode")) {
    c.mode = parse_mode(j.at("mode").get<std::string>());
  }
  if (j.contains("family")) {
    c.family = parse_family(j.at("family").get<std::string>());
  }
  c.min_ops = j.value("min_ops", c.min_ops);
  c.max_ops = j.value("max_ops", c.max_ops);
  c.max_degree = j.value("max_degree", c.max_degree);
  c.min_length = j.value("min_length", c.min_length);
  c.max_length = j.value("max_length", c.max_length);
  c.p_const = j.value("p_const", c.p_const);
  c.p_index = j.value("p_index", c.p_index);
  c.p_var = j.value("p_var", c.p_var);
  c.init_low = j.value("init_low", c.init_low);
  c.init_high = j.value("init_high", c.init_high);
  c.const_low = j.value("const_low", c.const_low);
  c.const_high = j.value("const_high", c.const_high);
  c.named_constants = j.value("named_constants", c.named_constants);
  c.real_prefactors = j.value("real_prefactors", c.real_prefactors);
  c.noise_leaf_prob = j.value("noise_leaf_prob", c.noise_leaf_prob);
  c.dimensions = j.value("dimensions", c.dimensions);
  c.extra_terms = j.value("extra_terms", c.extra_terms);
  c.max_attempts = j.value("max_attempts", c.max_attempts);
  return c;
}

}  // namespace recur
