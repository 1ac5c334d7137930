#pragma once

// Data intake and report serialisation: CSV samples, JSON documents for
// test results and experiment tables, experiment files.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ellipsym/bootstrap.hpp"
#include "ellipsym/simharness.hpp"

namespace ellipsym {

/// Comma-separated numeric rows; a first row that is not numeric is taken
/// as a header. Locale independent. ParseError names the offending line.
Sample read_csv(std::istream& in);
Sample read_csv_file(const std::string& path);

/// FNV-1a 64-bit digest of a byte string, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Shortest round-trip decimal form of a double.
std::string format_real(double x);

nlohmann::ordered_json test_report_json(const TestResult& result, const TestConfig& cfg,
                                        const std::string& input_digest, double alpha,
                                        bool include_replicates, bool include_timing);

/// Overrides fields of cfg from a JSON object (keys as in the report's
/// "config" block). Unknown keys raise Validation.
void apply_test_config(const nlohmann::json& doc, TestConfig& cfg, double& alpha);

/// Experiment file; errors name the JSON path of the offending field.
SimulationSpec simulation_spec_from_json(const nlohmann::json& doc);
nlohmann::ordered_json simulation_spec_to_json(const SimulationSpec& spec);

/// One row per cell: null,alternative,estimator,freq,se,starred,valid.
void write_rejection_csv(const RejectionTable& table, std::ostream& out);
nlohmann::ordered_json rejection_table_json(const RejectionTable& table, bool include_timing);

/// Two columns "x,density".
void write_kde_csv(const KdeCurve& curve, std::ostream& out);

}  // namespace ellipsym
