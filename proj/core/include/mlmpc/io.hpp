#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlmpc/linalg.hpp"

namespace mlmpc {

// FNV-1a over the canonical text form; stable across runs and platforms.
std::uint64_t fnv1a_hash(const std::string& text);
std::string hash_hex(std::uint64_t h);

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header, const Matrix& rows);

struct CsvTable {
  std::vector<std::string> header;
  Matrix rows;
};

CsvTable read_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

}  // namespace mlmpc
