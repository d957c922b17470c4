#pragma once

#include "curvepat/bourgain.hpp"
#include "curvepat/counting.hpp"
#include "curvepat/gridfield.hpp"
#include "curvepat/oscillatory.hpp"
#include "curvepat/patterns.hpp"
#include "curvepat/polycurve.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace curvepat {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// Reproducibility header carried by every output file.
struct RunMeta {
  std::string version = kToolVersion;
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  json tolerances = json::object();
};

std::string sha256_hex(const std::string& data);
// Hash of the canonical (sorted-key, compact) dump.
std::string config_hash(const json& config);

json to_json(const RunMeta& m);
// "# key=value" lines for CSV files.
std::string csv_header(const RunMeta& m);

// Writes to a temporary sibling, then renames over `path`.
void atomic_write(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

// Curve files: {"polys": [{"coeffs": {"1": 1.0, "2": -0.5}}, ...]}; a bare exponent map per entry is accepted too.
Curve curve_from_json(const json& j);
json curve_to_json(const Curve& c);
Curve read_curve(const std::string& path);

// Grids: raw little-endian float64 payload at `path` (row-major, last axis fastest)
// plus the sidecar `path + ".json"` holding n, dims, box, dtype and order.
void write_grid(const std::string& path, const GridFunction& g, const RunMeta& meta);
GridFunction read_grid(const std::string& path);
std::string sidecar_path(const std::string& grid_path);

json to_json(const Check& c);
json to_json(const std::vector<Check>& checks);
json to_json(const CountingResult& r);
json to_json(const DecayFit& f);
json to_json(const StepAudit& a);
json to_json(const CornerAudit& a);
json to_json(const Schedule& s);
json to_json(const IterationTrace& t);
json to_json(const TelescopeAudit& a);
json to_json(const PatternWitness& w);

std::string decay_csv(const DecayFit& f, const RunMeta& meta);
std::string iteration_csv(const IterationTrace& t, const RunMeta& meta);
std::string witness_csv(const PatternWitness& w, const RunMeta& meta);

}  // namespace curvepat
