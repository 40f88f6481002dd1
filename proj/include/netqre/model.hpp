#pragma once

// Self-contained model files: manifest, value spaces and ranked candidates.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "netqre/manifest.hpp"
#include "netqre/synth.hpp"
#include "netqre/trace.hpp"

namespace netqre {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Model {
  TraceManifest manifest;
  ValueSpaces spaces;
  std::vector<Candidate> candidates;  // best first
};

void save_model(std::ostream& out, const Model& m);
Model load_model(std::istream& in);
void save_model_file(const std::string& path, const Model& m);
Model load_model_file(const std::string& path);

}  // namespace netqre
