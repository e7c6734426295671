#include "olsbpi/preset.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#ifndef OLSBPI_SOURCE_DATA_DIR
#define OLSBPI_SOURCE_DATA_DIR "data"
#endif

namespace olsbpi {

namespace {

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = j.at(i).at(c).get<double>();
  return M;
}

}  // namespace

std::string preset_data_dir() {
  if (const char* env = std::getenv("OLSBPI_DATA_DIR"); env && *env) return env;
  return OLSBPI_SOURCE_DATA_DIR;
}

PendulumPreset preset_triple_pendulum(const std::string& data_dir) {
  const std::string dir = data_dir.empty() ? preset_data_dir() : data_dir;
  const auto path = std::filesystem::path(dir) / "triple_pendulum_ab.json";
  std::ifstream in(path);
  if (!in)
    throw MissingABData("cannot open " + path.string() +
                        " (set OLSBPI_DATA_DIR to the data directory)");

  Matrix A, B;
  try {
    const auto j = nlohmann::json::parse(in);
    A = matrix_from_json(j.at("A"));
    B = matrix_from_json(j.at("B"));
  } catch (const nlohmann::json::exception& e) {
    throw MissingABData(path.string() + " is malformed: " + e.what());
  }
  if (A.rows() != 6 || A.cols() != 6 || B.rows() != 6 || B.cols() != 2)
    throw MissingABData(path.string() + " must hold a 6x6 A and a 6x2 B");

  Matrix D1 = Matrix::Zero(6, 6);
  D1(5, 5) = 0.01;
  Matrix F1 = Matrix::Zero(6, 2);
  F1(3, 0) = 0.01;
  const Matrix C = 0.1 * Matrix::Identity(6, 6);

  Matrix K1(2, 6);
  K1 << -9.44, -3.11, -1.2, -3.11, -1.31, -0.58,
      -32.5, -11.51, -3.87, -10.72, -4.41, -2.01;

  return {SystemModel(A, B, {D1}, {F1}, C),
          CostWeights(Matrix::Identity(6, 6), Matrix::Identity(2, 2)),
          PolicyGain{K1}};
}

}  // namespace olsbpi
