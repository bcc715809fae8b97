#pragma once

#include "evtfair/evt.hpp"
#include "evtfair/mitigation.hpp"
#include "evtfair/statcompare.hpp"
#include "evtfair/tailsampler.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace evtfair {

using Json = nlohmann::ordered_json;

// Serializes with every float written as %.17g; non-finite numbers become null.
std::string dump_json(const Json& j);

Json to_json(const EvtFit& fit);
EvtFit fit_from_json(const Json& j);

Json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);

// Per-sample CD rows are not serialized; everything else round-trips.
Json to_json(const AuditReport& report);
AuditReport audit_report_from_json(const Json& j);

Json to_json(const MitigationResult& result);
Json to_json(const ComparisonResult& result);

// Fixed-width summary: EVT characteristics per group, then return levels.
std::string render_tables(const AuditReport& report);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// 64-bit FNV-1a of the file bytes as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

// "empirical,theoretical" rows of the Q-Q diagnostic.
std::string qq_csv(const QqDiagnostic& qq);
// Fitted GEV density over the exceedance range, "x,density".
std::string density_csv(const EvtFit& fit, std::span<const double> exceedances, int points = 101);

}  // namespace evtfair
