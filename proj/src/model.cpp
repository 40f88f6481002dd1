#include "netqre/model.hpp"

#include <cmath>
#include <fstream>

#include "json_io.hpp"

namespace netqre {

namespace {

using nlohmann::json;

// JSON has no infinities; they are spelled out.
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from(const json& j) {
  if (j.is_string()) {
    if (j == "inf") return kInf;
    if (j == "-inf") return -kInf;
    throw ModelError("bad number: " + j.get<std::string>());
  }
  return j.get<double>();
}

}  // namespace

void save_model(std::ostream& out, const Model& m) {
  json j;
  j["format"] = "netqre-model";
  j["version"] = 1;
  j["manifest"] = detail::manifest_to_json(m.manifest);
  json spaces = json::object();
  for (std::size_t i = 0; i < m.manifest.size(); ++i)
    spaces[m.manifest.names()[i]] = m.spaces.values.at(i);
  j["value_spaces"] = spaces;
  json cs = json::array();
  for (const auto& c : m.candidates) {
    json e;
    e["program"] = print(c.classifier.program, &m.manifest);
    e["threshold"] = number(c.classifier.threshold);
    e["threshold_range"] = {number(c.classifier.threshold_range.lo), number(c.classifier.threshold_range.hi)};
    e["learning_rate"] = c.learning_rate;
    e["cost"] = c.cost;
    cs.push_back(std::move(e));
  }
  j["candidates"] = cs;
  out << j.dump(2) << '\n';
}

Model load_model(std::istream& in) {
  try {
    json j = json::parse(in);
    if (j.value("format", "") != "netqre-model") throw ModelError("not a model file");
    if (j.value("version", 0) != 1) throw ModelError("unsupported model version");
    Model m;
    m.manifest = detail::manifest_from_json(j.at("manifest"));
    const auto& spaces = j.at("value_spaces");
    for (const auto& name : m.manifest.names()) {
      if (!spaces.contains(name)) throw ModelError("model has no value space for " + name);
      m.spaces.values.push_back(spaces.at(name).get<std::vector<std::uint64_t>>());
    }
    for (const auto& e : j.at("candidates")) {
      Candidate c;
      c.classifier.program = parse_program(e.at("program").get<std::string>(), m.manifest);
      c.classifier.threshold = number_from(e.at("threshold"));
      const auto& r = e.at("threshold_range");
      c.classifier.threshold_range = Interval(number_from(r.at(0)), number_from(r.at(1)));
      c.learning_rate = e.at("learning_rate").get<double>();
      c.cost = e.at("cost").get<double>();
      c.text = print(c.classifier.program);
      m.candidates.push_back(std::move(c));
    }
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  } catch (const ParseError& e) {
    throw ModelError(std::string("bad program in model file: ") + e.what());
  }
}

void save_model_file(const std::string& path, const Model& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write " + path);
  save_model(out, m);
  if (!out) throw ModelError("failed writing " + path);
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot read " + path);
  return load_model(in);
}

}  // namespace netqre
