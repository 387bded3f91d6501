#include "blindid/dataset_io.hpp"

#include "blindid/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace blindid::io {
namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::filesystem::path& file) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ConfigError("malformed number '" + text + "' in " + file.string());
  return v;
}

Index parse_index(const std::string& text, const std::filesystem::path& file) {
  Index v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("malformed integer '" + text + "' in " + file.string());
  }
  return v;
}

// Reads data rows (skipping the header line) as vectors of cells.
std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& file, std::size_t columns) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(file.string() + " is empty");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw ConfigError(file.string() + ": expected " + std::to_string(columns) + " columns, got " +
                        std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("failed to format a double");
  return std::string(buf, ptr);
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  ds.validate();
  std::filesystem::create_directories(dir);
  const Dims& d = ds.dims;
  json header = {
      {"format", "blindid-dataset"},
      {"version", 1},
      {"n", d.n},
      {"k_f", d.k_f},
      {"q", d.q},
      {"mode", std::string(to_string(d.mode))},
      {"eta", ds.eta},
      {"snapshots", kSnapshotFile},
      {"row_order", "experiment-major: row j*(k_f+1)+k holds z^(j)[k], 0-based"},
  };
  open_out(dir / kDatasetHeader) << header.dump(2) << '\n';

  auto out = open_out(dir / kSnapshotFile);
  for (Index i = 0; i < d.n; ++i) out << (i ? "," : "") << "z_" << (i + 1);
  out << '\n';
  for (Index c = 0; c < ds.states.cols(); ++c) {
    for (Index i = 0; i < d.n; ++i) out << (i ? "," : "") << format_double(ds.states(i, c));
    out << '\n';
  }
}

Dataset read_dataset(const std::filesystem::path& dir) {
  json header;
  try {
    header = json::parse(open_in(dir / kDatasetHeader));
  } catch (const json::exception& e) {
    throw ConfigError("invalid dataset header in " + dir.string() + ": " + e.what());
  }
  if (header.value("format", "") != "blindid-dataset") throw ConfigError(dir.string() + " is not a blindid dataset");

  Dataset ds;
  try {
    ds.dims.n = header.at("n").get<Index>();
    ds.dims.k_f = header.at("k_f").get<Index>();
    ds.dims.q = header.at("q").get<Index>();
    ds.dims.mode = parse_mode(header.value("mode", "ltv"));
    ds.eta = header.at("eta").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("dataset header: ") + e.what());
  }
  ds.dims.validate();

  const auto file = dir / header.value("snapshots", std::string(kSnapshotFile));
  const auto rows = read_rows(file, static_cast<std::size_t>(ds.dims.n));
  const Index expected = ds.dims.q * (ds.dims.k_f + 1);
  if (static_cast<Index>(rows.size()) != expected) {
    throw ConfigError(file.string() + ": expected " + std::to_string(expected) + " snapshot rows, got " +
                      std::to_string(rows.size()));
  }
  ds.states.resize(ds.dims.n, expected);
  for (Index c = 0; c < expected; ++c)
    for (Index i = 0; i < ds.dims.n; ++i) ds.states(i, c) = parse_double(rows[c][i], file);
  ds.validate();
  return ds;
}

void write_inputs_csv(const std::filesystem::path& file, const InputPlan& plan) {
  auto out = open_out(file);
  out << "experiment,step,state,value\n";
  for (const auto& [key, value] : plan.entries) {
    out << key.experiment << ',' << key.step << ',' << key.state << ',' << format_double(value) << '\n';
  }
}

InputPlan read_inputs_csv(const std::filesystem::path& file, const Dims& dims) {
  InputPlan plan{dims, {}};
  for (const auto& row : read_rows(file, 4)) {
    InputKey key{parse_index(row[0], file), parse_index(row[1], file), parse_index(row[2], file)};
    plan.entries[key] = parse_double(row[3], file);
  }
  plan.validate();
  return plan;
}

void write_dynamics_csv(const std::filesystem::path& file, const LtvModel& model) {
  auto out = open_out(file);
  const Index n = model.dims.n;
  out << "step,row";
  for (Index l = 0; l < n; ++l) out << ",a_" << (l + 1);
  out << '\n';
  for (std::size_t k = 0; k < model.a_mats.size(); ++k) {
    for (Index i = 0; i < n; ++i) {
      out << k << ',' << i;
      for (Index l = 0; l < n; ++l) out << ',' << format_double(model.a_mats[k](i, l));
      out << '\n';
    }
  }
}

LtvModel read_dynamics_csv(const std::filesystem::path& file, const Dims& dims) {
  const Index n = dims.n;
  const Index blocks = dims.mode == Mode::lti ? 1 : dims.k_f;
  LtvModel model{dims, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(blocks), Eigen::MatrixXd::Zero(n, n))};
  const auto rows = read_rows(file, static_cast<std::size_t>(n + 2));
  if (static_cast<Index>(rows.size()) != blocks * n) throw ConfigError(file.string() + ": wrong number of rows");
  for (const auto& row : rows) {
    const Index k = parse_index(row[0], file);
    const Index i = parse_index(row[1], file);
    if (k < 0 || k >= blocks || i < 0 || i >= n) throw ConfigError(file.string() + ": index out of range");
    for (Index l = 0; l < n; ++l) model.a_mats[static_cast<std::size_t>(k)](i, l) = parse_double(row[l + 2], file);
  }
  model.validate();
  return model;
}

void write_matrix_csv(const std::filesystem::path& file, const Eigen::MatrixXd& m) {
  auto out = open_out(file);
  for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << "c_" << (c + 1);
  out << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

void write_vector_csv(const std::filesystem::path& file, const Eigen::VectorXd& v, const std::string& header) {
  auto out = open_out(file);
  out << header << '\n';
  for (Index i = 0; i < v.size(); ++i) out << format_double(v(i)) << '\n';
}

}  // namespace blindid::io
