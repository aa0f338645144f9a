#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "hinfsparse/ellipsoid.h"
#include "hinfsparse/lti.h"

namespace hinfsparse::io {

using Json = nlohmann::ordered_json;

/// {"rows", "cols", "data"} with row-major data. Throws Error on non-finite
/// entries, which JSON cannot carry.
Json MatrixToJson(const Eigen::MatrixXd& M);
/// Accepts the MatrixToJson layout or an array of rows. Throws Error on ragged
/// or non-numeric input.
Eigen::MatrixXd MatrixFromJson(const Json& j);

/// One row per line, comma-separated, no header, 17 significant digits.
std::string MatrixToCsv(const Eigen::MatrixXd& M);
Eigen::MatrixXd MatrixFromCsv(const std::string& text);

/// {"A", "B", "Bv", "C", "Dgu", "Dgv"}.
Json SystemToJson(const StateSpaceSystem& sys);
StateSpaceSystem SystemFromJson(const Json& j);

/// {"F"}.
Json GainToJson(const FeedbackGain& F);
/// Accepts {"F": matrix} or a bare matrix.
FeedbackGain GainFromJson(const Json& j);

/// {"gamma", "F_o", "Z", "R", "Zinv", "allow_theta_above_one"}.
Json RegionToJson(const EllipsoidRegion& region);
/// Zinv is recomputed from Z when absent.
EllipsoidRegion RegionFromJson(const Json& j);

std::string ReadText(const std::filesystem::path& path);
Json ReadJson(const std::filesystem::path& path);
/// Two-space indented dump with a trailing newline.
void WriteJson(const std::filesystem::path& path, const Json& j);
void WriteText(const std::filesystem::path& path, const std::string& text);

}  // namespace hinfsparse::io
