#include "gridcoher/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gridcoher/error.hpp"
#include "gridcoher/simulate.hpp"

namespace gridcoher {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), result.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
        out << contents;
        if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

nlohmann::json to_json(const NormReport& report) {
    nlohmann::json j;
    j["value"] = report.value;
    j["method"] = std::string(to_string(report.method));
    j["stderr"] = report.std_error ? nlohmann::json(*report.std_error) : nlohmann::json(nullptr);
    j["samples"] = report.samples ? nlohmann::json(*report.samples) : nlohmann::json(nullptr);
    auto modes = nlohmann::json::array();
    for (const auto& m : report.per_mode) modes.push_back({{"mode", m.mode}, {"value", m.value}});
    j["per_mode"] = std::move(modes);
    j["warnings"] = report.warnings;
    return j;
}

nlohmann::json to_json(const GammaOptimum& optimum) {
    nlohmann::json j;
    j["gamma_star"] = optimum.gamma_star;
    j["bracket"] = {optimum.lo, optimum.hi};
    j["regime"] = std::string(to_string(optimum.regime));
    j["achieved_norm"] = optimum.achieved_norm;
    if (optimum.search_gamma) j["search_gamma"] = *optimum.search_gamma;
    return j;
}

std::string trajectory_csv(const TrajectoryRecord& record) {
    std::ostringstream os;
    const auto n = record.omega.cols();
    const auto nz = record.z.cols();
    os << 't';
    for (Eigen::Index i = 0; i < n; ++i) os << ",omega_" << i;
    os << ",y_sq";
    for (Eigen::Index i = 0; i < nz; ++i) os << ",z_" << i;
    os << '\n';
    for (std::size_t k = 0; k < record.times.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        os << format_double(record.times[k]);
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(record.omega(r, i));
        os << ',' << format_double(record.y_sq[k]);
        for (Eigen::Index i = 0; i < nz; ++i) os << ',' << format_double(record.z(r, i));
        os << '\n';
    }
    return os.str();
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& matrix) {
    std::ostringstream os;
    os << "row,col,value\n";
    for (Eigen::Index r = 0; r < matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < matrix.cols(); ++c)
            if (matrix(r, c) != 0.0) os << r << ',' << c << ',' << format_double(matrix(r, c)) << '\n';
    write_text_file(path, os.str());
}

} // namespace gridcoher
