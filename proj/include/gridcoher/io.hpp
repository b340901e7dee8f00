#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridcoher/controllers.hpp"
#include "gridcoher/perf.hpp"
#include "gridcoher/tuning.hpp"

namespace gridcoher {

struct TrajectoryRecord;

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

/// Writes atomically enough for our purposes: to a sibling temp file, then rename.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

nlohmann::json to_json(const NormReport& report);
nlohmann::json to_json(const GammaOptimum& optimum);

/// Header `t,omega_0..omega_{n-1},y_sq`, followed by `z_*` columns when present.
std::string trajectory_csv(const TrajectoryRecord& record);

/// `row,col,value` for every nonzero entry; for inspecting assembled systems.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& matrix);

} // namespace gridcoher
