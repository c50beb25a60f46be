#include "pnpreg/cli/io.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace pnpreg::cli {

namespace {

void require_keys(const Json& j, const std::string& path, const std::set<std::string>& allowed,
                  const std::set<std::string>& required) {
  if (!j.is_object())
    throw ConfigError(path, "expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k))
      throw ConfigError(path.empty() ? k : path + "." + k, "unknown field");
  for (const auto& k : required)
    if (!j.contains(k))
      throw ConfigError(path.empty() ? k : path + "." + k, "missing required field");
}

Index positive_index(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() <= 0)
    throw ConfigError(path, "expected a positive integer");
  return Index(j.get<long long>());
}

ConvolutionMode mode_from_json(const Json& j, const std::string& path) {
  if (j == "circular")
    return ConvolutionMode::Circular;
  if (j == "truncated-z")
    return ConvolutionMode::TruncatedZ;
  throw ConfigError(path, "expected \"circular\" or \"truncated-z\"");
}

} // namespace

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_to_json(const Vectord& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i)
    out.push_back(number(v(i)));
  return out;
}

Vectord vector_from_json(const Json& j, const std::string& path) {
  if (!j.is_array())
    throw ConfigError(path, "expected an array of numbers");
  Vectord v(Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
    v(Index(i)) = j[i].get<double>();
    if (!std::isfinite(v(Index(i))))
      throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a finite number");
  }
  return v;
}

Json operator_to_json(const LinearOperatord& op) {
  Json j;
  j["dims"] = {op.out_dim(), op.in_dim()};
  if (auto d = op.as_dense()) {
    j["kind"] = "dense-matrix";
    Json rows = Json::array();
    for (Index i = 0; i < d->matrix.rows(); ++i)
      rows.push_back(vector_to_json(d->matrix.row(i).transpose()));
    j["payload"] = {{"rows", rows}};
  } else if (auto c = op.as_convolution()) {
    j["kind"] = "convolution";
    j["payload"] = {{"kernel", vector_to_json(c->taps)},
                    {"first", c->first},
                    {"mode", c->mode == ConvolutionMode::Circular ? "circular" : "truncated-z"}};
  } else {
    const auto& g = *op.as_diagonal();
    j["kind"] = "diagonal-in-basis";
    j["payload"] = {{"multipliers", vector_to_json(g.multipliers)}, {"unitary", operator_to_json(*g.unitary)}};
  }
  // Keep a stable key order: kind, dims, payload.
  Json out;
  out["kind"] = j["kind"];
  out["dims"] = j["dims"];
  out["payload"] = j["payload"];
  return out;
}

LinearOperatord operator_from_json(const Json& j, const std::string& path) {
  require_keys(j, path, {"kind", "dims", "payload"}, {"kind", "dims", "payload"});
  const auto& dims = j["dims"];
  if (!dims.is_array() || dims.size() != 2)
    throw ConfigError(path + ".dims", "expected [out, in]");
  const Index out_dim = positive_index(dims[0], path + ".dims[0]");
  const Index in_dim = positive_index(dims[1], path + ".dims[1]");
  const auto& kind = j["kind"];
  const auto& payload = j["payload"];
  const std::string pp = path + ".payload";

  if (kind == "dense-matrix") {
    require_keys(payload, pp, {"rows"}, {"rows"});
    const auto& rows = payload["rows"];
    if (!rows.is_array() || Index(rows.size()) != out_dim)
      throw ConfigError(pp + ".rows", "expected " + std::to_string(out_dim) + " rows");
    Matrixd m(out_dim, in_dim);
    for (Index i = 0; i < out_dim; ++i) {
      const std::string rp = pp + ".rows[" + std::to_string(i) + "]";
      const Vectord r = vector_from_json(rows[std::size_t(i)], rp);
      if (r.size() != in_dim)
        throw ConfigError(rp, "expected " + std::to_string(in_dim) + " entries");
      m.row(i) = r.transpose();
    }
    return LinearOperatord::dense(std::move(m));
  }
  if (kind == "convolution") {
    require_keys(payload, pp, {"kernel", "first", "mode"}, {"kernel"});
    if (out_dim != in_dim)
      throw ConfigError(path + ".dims", "convolution operators are square");
    const Vectord taps = vector_from_json(payload["kernel"], pp + ".kernel");
    if (taps.size() == 0)
      throw ConfigError(pp + ".kernel", "kernel is empty");
    Index first = 0;
    if (payload.contains("first")) {
      if (!payload["first"].is_number_integer())
        throw ConfigError(pp + ".first", "expected an integer");
      first = Index(payload["first"].get<long long>());
    }
    const auto mode = payload.contains("mode") ? mode_from_json(payload["mode"], pp + ".mode")
                                               : ConvolutionMode::Circular;
    return LinearOperatord::convolution(taps, in_dim, mode, first);
  }
  if (kind == "diagonal-in-basis") {
    require_keys(payload, pp, {"multipliers", "unitary"}, {"multipliers", "unitary"});
    if (out_dim != in_dim)
      throw ConfigError(path + ".dims", "diagonal-in-basis operators are square");
    auto u = operator_from_json(payload["unitary"], pp + ".unitary");
    const Vectord m = vector_from_json(payload["multipliers"], pp + ".multipliers");
    if (m.size() != in_dim || u.in_dim() != in_dim)
      throw ConfigError(pp, "multipliers and basis must match dims");
    const Matrixd um = to_dense_matrix(u);
    if ((um.transpose() * um - Matrixd::Identity(in_dim, in_dim)).cwiseAbs().maxCoeff() > 1e-10)
      throw ConfigError(pp + ".unitary", "basis is not unitary");
    return LinearOperatord::diagonal_in_basis(std::move(u), m);
  }
  throw ConfigError(path + ".kind", "expected \"dense-matrix\", \"convolution\" or \"diagonal-in-basis\"");
}

Json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in)
    throw ConfigError("", "cannot read " + file.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", file.string() + " is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& file, const Json& j) {
  std::ofstream out(file, std::ios::binary);
  if (!out)
    throw Error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

CsvWriter::CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header)
    : out_(file, std::ios::binary), columns_(header.size()) {
  if (!out_)
    throw Error("cannot write " + file.string());
  for (std::size_t i = 0; i < header.size(); ++i)
    out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(double v) {
  char buf[64];
  if (std::isnan(v))
    std::snprintf(buf, sizeof buf, "nan");
  else
    std::snprintf(buf, sizeof buf, "%.17g", v);
  return cell(std::string(buf));
}

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (in_row_ == columns_)
    throw Error("CsvWriter: too many cells in row");
  out_ << (in_row_ ? "," : "") << v;
  ++in_row_;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw Error("CsvWriter: row has " + std::to_string(in_row_) + " cells, header has " + std::to_string(columns_));
  out_ << '\n';
  in_row_ = 0;
}

} // namespace pnpreg::cli
