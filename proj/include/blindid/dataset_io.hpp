#pragma once

#include "blindid/model.hpp"

#include <filesystem>
#include <string>

namespace blindid::io {

// Dataset bundle layout (one directory):
//
//   dataset.json    header: format tag, n, k_f, q, mode, eta, row order and
//                   the name of the snapshot file
//   snapshots.csv   header line "z_1,...,z_n", then one row per snapshot,
//                   rows ordered experiment-major then step:
//                   row j*(k_f+1)+k holds z^(j)[k] (0-based j, k)
//
// Optional ground truth written by `simulate`:
//
//   inputs.csv      "experiment,step,state,value", one row per nonzero input
//   dynamics.csv    "step,row,a_1,...,a_n", one row per row of each A[k]
//
// Numbers are printed with 17 significant digits so files round-trip exactly.

inline constexpr const char* kDatasetHeader = "dataset.json";
inline constexpr const char* kSnapshotFile = "snapshots.csv";
inline constexpr const char* kInputsFile = "inputs.csv";
inline constexpr const char* kDynamicsFile = "dynamics.csv";

void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

void write_inputs_csv(const std::filesystem::path& file, const InputPlan& plan);
InputPlan read_inputs_csv(const std::filesystem::path& file, const Dims& dims);

void write_dynamics_csv(const std::filesystem::path& file, const LtvModel& model);
LtvModel read_dynamics_csv(const std::filesystem::path& file, const Dims& dims);

void write_matrix_csv(const std::filesystem::path& file, const Eigen::MatrixXd& m);
void write_vector_csv(const std::filesystem::path& file, const Eigen::VectorXd& v, const std::string& header);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace blindid::io
