#pragma once

// JSON and CSV serialization for configs, reports and record tables.

#include "needlet/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace needlet {

using Json = nlohmann::ordered_json;

constexpr const char* kVersion = NEEDLET_VERSION;

/// Parses an experiment config; absent keys keep their defaults, unknown keys
/// are rejected. Throws PreconditionError on schema violations.
ExperimentConfig config_from_json(const Json& j);
Json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

Json to_json(const CurveCell& c);
Json to_json(const RateFit& f);
Json to_json(const ExperimentRecord& r);

/// m,seed,n,lambda,q,error,wall_ms; doubles at full precision. wall_ms is
/// written as 0 unless `timing` is set so reruns are byte-identical.
void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records, bool timing = false);

/// Dataset CSV with columns x1,x2,x3,y. The bound M is carried in a
/// leading comment line "# M=<value>" when present.
void write_dataset_csv(std::ostream& os, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Expansion JSON {n, d, window, centers, coeffs, M}.
Json to_json(const KernelExpansion& f);

/// Writes pretty JSON followed by a newline.
void write_json(const std::filesystem::path& path, const Json& j);

/// Shortest round-trip decimal for a double.
std::string format_double(double v);

}  // namespace needlet
