#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "doctest.h"
#include "mlmpc/config.hpp"
#include "mlmpc/io.hpp"

using namespace mlmpc;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name)
      : path(fs::temp_directory_path() / name) {}
  ~TempFile() {
    std::error_code ec;
    fs::remove(path, ec);
  }
};

}  // namespace

TEST_CASE("experiment defaults expose typed accessors") {
  const ExperimentConfig cfg = ExperimentConfig::defaults("cstr");
  CHECK(cfg.experiment() == "cstr");
  CHECK(cfg.number("metric_c_in") == 0.1);
  CHECK(cfg.number("metric_c_fn") == 10.0);
  CHECK(cfg.integer("n_train") == 3000);
  CHECK(cfg.integer("n_init") * cfg.integer("rollout") == 4000);
  CHECK(cfg.text("parametrization") == "alpha");
  CHECK(cfg.number("llr_threshold") == 0.2);
  // Zero means the prefix is derived from the state dimension.
  CHECK(cfg.integer("policy_prefix") == 0);
  CHECK(cfg.has("sigma"));
  CHECK_FALSE(cfg.has("no_such_key"));

  for (const std::string& name : known_experiments()) {
    CHECK_NOTHROW(ExperimentConfig::defaults(name));
  }
  CHECK_THROWS_AS(ExperimentConfig::defaults("warp-drive"),
                  std::invalid_argument);
}

TEST_CASE("typos surface instead of silently reverting to defaults") {
  ExperimentConfig cfg = ExperimentConfig::defaults("cstr");
  CHECK_THROWS_AS(cfg.set("n_trian", "10"), std::runtime_error);
  CHECK_THROWS_AS(cfg.text("missing"), std::runtime_error);

  cfg.set("seed", "banana");
  CHECK_THROWS_AS(cfg.integer("seed"), std::runtime_error);
  CHECK_THROWS_AS(cfg.number("seed"), std::runtime_error);
  cfg.set("seed", "12");
  CHECK(cfg.integer("seed") == 12);

  cfg.set("out_dir", "true");
  CHECK(cfg.flag("out_dir"));
  cfg.set("out_dir", "0");
  CHECK_FALSE(cfg.flag("out_dir"));
  cfg.set("out_dir", "maybe");
  CHECK_THROWS_AS(cfg.flag("out_dir"), std::runtime_error);
}

TEST_CASE("config files override defaults and reject mismatches") {
  TempFile f("mlmpc_cfg_test.cfg");
  {
    std::ofstream out(f.path);
    out << "# comment line\n";
    out << "experiment = cstr\n";
    out << "n_train = 750   # inline comment\n";
    out << "\n";
    out << "sigma=0.02\n";
  }
  const ExperimentConfig cfg = ExperimentConfig::load("cstr", f.path);
  CHECK(cfg.integer("n_train") == 750);
  CHECK(cfg.number("sigma") == 0.02);
  CHECK(cfg.integer("rollout") == 20);  // untouched default

  CHECK_THROWS_AS(ExperimentConfig::load("fig1-demo", f.path),
                  std::runtime_error);
  CHECK_THROWS_AS(ExperimentConfig::load("cstr", f.path / "missing"),
                  std::runtime_error);

  TempFile bad("mlmpc_cfg_bad.cfg");
  {
    std::ofstream out(bad.path);
    out << "just some words\n";
  }
  CHECK_THROWS_AS(ExperimentConfig::load("cstr", bad.path), std::runtime_error);
}

TEST_CASE("the canonical form is sorted and drives the hash") {
  const ExperimentConfig cfg = ExperimentConfig::defaults("fig1-demo");
  const std::string canon = cfg.canonical();
  CHECK(canon.rfind("experiment=fig1-demo\n", 0) == 0);

  // Every subsequent line is a sorted key=value pair.
  std::string prev;
  std::size_t pos = canon.find('\n') + 1;
  while (pos < canon.size()) {
    const auto end = canon.find('\n', pos);
    const std::string line = canon.substr(pos, end - pos);
    const std::string key = line.substr(0, line.find('='));
    CHECK(prev < key);
    prev = key;
    pos = end + 1;
  }

  CHECK(cfg.hash() == hash_hex(fnv1a_hash(canon)));
  ExperimentConfig other = cfg;
  other.set("seed", "1");
  CHECK(other.hash() != cfg.hash());
  CHECK(ExperimentConfig::defaults("fig1-demo").hash() == cfg.hash());
}

TEST_CASE("the hash implements the reference FNV-1a vectors") {
  CHECK(fnv1a_hash("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a_hash("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a_hash("hello") == 0xa430d84680aabd0bull);
  CHECK(hash_hex(0xcbf29ce484222325ull) == "cbf29ce484222325");
  CHECK(hash_hex(1) == "0000000000000001");
}

TEST_CASE("CSV tables survive a full-precision round trip") {
  Matrix m(3, 3);
  m << 0.1, -1.0 / 3.0, 1e-300,
      123456789.123456789, -0.0, 2.0,
      5e-324, 1.7976931348623157e308, -42.5;
  TempFile f("mlmpc_io_roundtrip.csv");
  write_csv(f.path, {"a", "b", "c"}, m);
  const CsvTable t = read_csv(f.path);
  REQUIRE(t.header.size() == 3);
  CHECK(t.header[1] == "b");
  REQUIRE(t.rows.rows() == 3);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(t.rows(r, c) == m(r, c));
  }

  CHECK_THROWS_AS(write_csv(f.path, {"a", "b"}, m), std::invalid_argument);
}

TEST_CASE("malformed CSV inputs are rejected with context") {
  TempFile ragged("mlmpc_io_ragged.csv");
  {
    std::ofstream out(ragged.path);
    out << "a,b\n1,2\n3\n";
  }
  CHECK_THROWS_AS(read_csv(ragged.path), std::runtime_error);

  TempFile text("mlmpc_io_text.csv");
  {
    std::ofstream out(text.path);
    out << "a,b\n1,two\n";
  }
  CHECK_THROWS_AS(read_csv(text.path), std::runtime_error);

  TempFile empty("mlmpc_io_empty.csv");
  { std::ofstream out(empty.path); }
  CHECK_THROWS_AS(read_csv(empty.path), std::runtime_error);

  CHECK_THROWS_AS(read_csv(fs::temp_directory_path() / "mlmpc_io_absent.csv"),
                  std::runtime_error);

  // A header-only file is a valid empty table.
  TempFile header_only("mlmpc_io_header.csv");
  {
    std::ofstream out(header_only.path);
    out << "x,y\n";
  }
  const CsvTable t = read_csv(header_only.path);
  CHECK(t.header.size() == 2);
  CHECK(t.rows.rows() == 0);
}

TEST_CASE("carriage returns from other platforms are stripped") {
  TempFile f("mlmpc_io_crlf.csv");
  {
    std::ofstream out(f.path, std::ios::binary);
    out << "a,b\r\n1.5,2.5\r\n";
  }
  const CsvTable t = read_csv(f.path);
  REQUIRE(t.header.size() == 2);
  CHECK(t.header[1] == "b");
  CHECK(t.rows(0, 1) == 2.5);
}

TEST_CASE("matrices and vectors survive the JSON round trip") {
  Matrix m(2, 3);
  m << 1.0, 0.1, -2.5, 1e-300, 3.0, -1.0 / 3.0;
  const Matrix m2 = matrix_from_json(matrix_to_json(m));
  REQUIRE(m2.rows() == 2);
  REQUIRE(m2.cols() == 3);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(m2(r, c) == m(r, c));
  }

  Vector v(4);
  v << 0.1, -0.2, 1e-17, 4.0;
  const Vector v2 = vector_from_json(vector_to_json(v));
  for (int i = 0; i < 4; ++i) CHECK(v2(i) == v(i));

  nlohmann::json bad = matrix_to_json(m);
  bad["rows"] = 5;
  CHECK_THROWS_AS(matrix_from_json(bad), std::runtime_error);
  nlohmann::json bad_cols = matrix_to_json(m);
  bad_cols["cols"] = 7;
  CHECK_THROWS_AS(matrix_from_json(bad_cols), std::runtime_error);

  // Through an actual file, including text parsing.
  TempFile f("mlmpc_io_mat.json");
  write_json(f.path, matrix_to_json(m));
  const Matrix m3 = matrix_from_json(read_json(f.path));
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(m3(r, c) == m(r, c));
  }
  CHECK_THROWS_AS(read_json(fs::temp_directory_path() / "mlmpc_absent.json"),
                  std::runtime_error);
}
