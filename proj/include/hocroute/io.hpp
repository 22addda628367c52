#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hocroute/calibrator.hpp"
#include "hocroute/losses.hpp"

namespace hocroute::io {

inline constexpr const char* kDatasetFormat = "hocroute-dataset";
inline constexpr const char* kModelFormat = "hocroute-model";
inline constexpr const char* kManifestFormat = "hocroute-manifest";
inline constexpr int kFormatVersion = 1;

/// Sidecar describing a JSONL dataset; stored next to it as "<path>.header.json".
struct DatasetHeader {
    std::size_t num_classes = 2;
    std::vector<std::string> class_names;
};

std::filesystem::path header_path(const std::filesystem::path& dataset);

DatasetHeader read_header(const std::filesystem::path& dataset);

/// Parses one JSONL record. Without labels (allowed only when `require_labels`
/// is false) the snapshot mean is a placeholder equal to the weak prediction.
SnapshotExample parse_record(const std::string& line, std::size_t line_number, std::size_t num_classes,
                             bool require_labels = true);

/// Reads a dataset in file order. Errors name the line number and field.
std::vector<SnapshotExample> ingest(const std::filesystem::path& dataset);
std::vector<SnapshotExample> ingest(std::istream& in, std::size_t num_classes);

std::string record_json(const SnapshotExample& example);

void write_dataset(const std::filesystem::path& dataset, std::span<const SnapshotExample> examples,
                   const DatasetHeader& header);

/// JSON form of a loss: {"kind": ..., "params": {...}}.
std::string loss_to_json(const LossSpec& loss);
LossSpec loss_from_json(const std::string& text);

std::string model_to_json(const CalibratedRouterModel& model);
CalibratedRouterModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const CalibratedRouterModel& model);
CalibratedRouterModel load_model(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// External routing scores: CSV lines "id,score", an optional header line and
/// '#' comments are skipped.
std::map<std::string, double> read_scores_csv(const std::filesystem::path& path);

}  // namespace hocroute::io
