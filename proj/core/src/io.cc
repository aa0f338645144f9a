#include "hinfsparse/io.h"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "hinfsparse/errors.h"
#include "hinfsparse/linalg.h"

namespace hinfsparse::io {

using Eigen::MatrixXd;

namespace {

// Reports schema violations (missing keys, wrong types) as Error.
template <typename Fn>
auto Parse(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

Json MatrixToJson(const MatrixXd& M) {
  Json data = Json::array();
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      if (!std::isfinite(M(i, j))) throw Error("cannot serialize a non-finite matrix entry");
      data.push_back(M(i, j));
    }
  }
  Json j;
  j["rows"] = M.rows();
  j["cols"] = M.cols();
  j["data"] = std::move(data);
  return j;
}

MatrixXd MatrixFromJson(const Json& j) {
  return Parse("matrix", [&]() -> MatrixXd {
    if (j.is_object()) {
      const int rows = j.at("rows").get<int>();
      const int cols = j.at("cols").get<int>();
      const Json& data = j.at("data");
      if (rows < 0 || cols < 0 || !data.is_array() ||
          data.size() != static_cast<std::size_t>(rows) * cols) {
        throw Error("matrix object has inconsistent rows/cols/data");
      }
      MatrixXd M(rows, cols);
      for (int i = 0; i < rows; ++i) {
        for (int k = 0; k < cols; ++k) M(i, k) = data.at(i * cols + k).get<double>();
      }
      return M;
    }
    if (!j.is_array()) throw Error("matrix must be an array of rows");
    const auto rows = static_cast<int>(j.size());
    const int cols = rows == 0 ? 0 : static_cast<int>(j.at(0).size());
    MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i) {
      const Json& row = j.at(i);
      if (!row.is_array() || static_cast<int>(row.size()) != cols) {
        throw Error("matrix rows have unequal lengths");
      }
      for (int k = 0; k < cols; ++k) {
        if (!row.at(k).is_number()) throw Error("matrix entries must be numbers");
        M(i, k) = row.at(k).get<double>();
      }
    }
    return M;
  });
}

Json SystemToJson(const StateSpaceSystem& sys) {
  Json j;
  j["A"] = MatrixToJson(sys.A);
  j["B"] = MatrixToJson(sys.B);
  j["Bv"] = MatrixToJson(sys.Bv);
  j["C"] = MatrixToJson(sys.C);
  j["Dgu"] = MatrixToJson(sys.Dgu);
  j["Dgv"] = MatrixToJson(sys.Dgv);
  return j;
}

StateSpaceSystem SystemFromJson(const Json& j) {
  StateSpaceSystem sys = Parse("system", [&] {
    StateSpaceSystem sys;
    sys.A = MatrixFromJson(j.at("A"));
    sys.B = MatrixFromJson(j.at("B"));
    sys.C = MatrixFromJson(j.at("C"));
    sys.Dgu = MatrixFromJson(j.at("Dgu"));
    sys.Bv = MatrixFromJson(j.at("Bv"));
    sys.Dgv = MatrixFromJson(j.at("Dgv"));
    return sys;
  });
  sys.Validate();
  return sys;
}

Json GainToJson(const FeedbackGain& F) {
  Json j;
  j["F"] = MatrixToJson(F.F);
  return j;
}

FeedbackGain GainFromJson(const Json& j) {
  if (j.is_object() && j.contains("F")) return FeedbackGain{MatrixFromJson(j.at("F"))};
  return FeedbackGain{MatrixFromJson(j)};
}

Json RegionToJson(const EllipsoidRegion& region) {
  Json j;
  j["gamma"] = region.gamma;
  j["F_o"] = MatrixToJson(region.F_o);
  j["Z"] = MatrixToJson(region.Z);
  j["R"] = MatrixToJson(region.R);
  j["Zinv"] = MatrixToJson(region.Zinv);
  j["allow_theta_above_one"] = region.allow_theta_above_one;
  return j;
}

EllipsoidRegion RegionFromJson(const Json& j) {
  EllipsoidRegion region = Parse("region", [&] {
    EllipsoidRegion region;
    region.gamma = j.at("gamma").get<double>();
    region.F_o = MatrixFromJson(j.at("F_o"));
    region.Z = MatrixFromJson(j.at("Z"));
    region.R = MatrixFromJson(j.at("R"));
    region.Zinv = j.contains("Zinv") ? MatrixFromJson(j.at("Zinv")) : linalg::PdInverse(region.Z);
    region.allow_theta_above_one = j.value("allow_theta_above_one", false);
    return region;
  });
  region.Validate();
  return region;
}

Json ReadJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string MatrixToCsv(const MatrixXd& M) {
  std::ostringstream out;
  out.precision(17);
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      if (j > 0) out << ',';
      out << M(i, j);
    }
    out << '\n';
  }
  return out.str();
}

MatrixXd MatrixFromCsv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
        if (used != field.size()) throw Error("");
      } catch (const std::exception&) {
        throw Error("bad CSV matrix entry '" + field + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error("CSV matrix rows have unequal lengths");
    }
    rows.push_back(std::move(row));
  }
  const auto r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.front().size());
  MatrixXd M(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) M(i, j) = rows[i][j];
  }
  return M;
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteJson(const std::filesystem::path& path, const Json& j) {
  WriteText(path, j.dump(2) + "\n");
}

}  // namespace hinfsparse::io
