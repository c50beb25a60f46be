#pragma once

#include "pnpreg/linear_operator.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace pnpreg::cli {

using Json = nlohmann::ordered_json;

/// Invalid configuration or input file; `path` names the offending field.
class ConfigError : public Error {
public:
  ConfigError(const std::string& path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

Json vector_to_json(const Vectord& v);
Vectord vector_from_json(const Json& j, const std::string& path);

/// Finite numbers as-is, NaN and infinities as null.
Json number(double v);

/// {kind, dims: [out, in], payload}.
Json operator_to_json(const LinearOperatord& op);
LinearOperatord operator_from_json(const Json& j, const std::string& path);

Json read_json_file(const std::filesystem::path& file);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& file, const Json& j);

/// Minimal CSV writer with a fixed header; numbers use 17 significant digits.
class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(const std::string& v);
  void end_row();

private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

} // namespace pnpreg::cli
