#pragma once

// Shared test scaffolding: scratch directories, raster builders, and a
// harness for driving the CLI binary named by CITYADAPT_BIN.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cityadapt/raster.hpp"
#include "cityadapt/rng.hpp"

namespace testutil {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;

  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "cityadapt_test_XXXXXX").string();
    char* raw = ::mkdtemp(tmpl.data());
    if (!raw) throw std::runtime_error("mkdtemp failed");
    path = raw;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Raster whose bands are filled by a callback (x, y, band index) -> value.
template <typename F>
cityadapt::Raster make_raster(int w, int h, const std::vector<std::string>& bands, F&& fill) {
  cityadapt::Raster raster;
  raster.width = w;
  raster.height = h;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    cityadapt::Band band;
    band.name = bands[b];
    band.grid = cityadapt::Grid(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) band.grid.at(x, y) = fill(x, y, b);
    }
    raster.bands.push_back(std::move(band));
  }
  return raster;
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string cli_binary() {
  const char* bin = std::getenv("CITYADAPT_BIN");
  if (!bin) throw std::runtime_error("CITYADAPT_BIN is not set");
  return bin;
}

inline std::string shell_quote(const std::string& s) {
  std::string quoted = "'";
  for (char c : s) {
    if (c == '\'') {
      quoted += "'\\''";
    } else {
      quoted += c;
    }
  }
  quoted += "'";
  return quoted;
}

// Runs the CLI with the given arguments, capturing exit code and streams.
inline CliResult run_cli(const std::vector<std::string>& args, const fs::path& scratch) {
  const fs::path out_path = scratch / "cli_stdout.txt";
  const fs::path err_path = scratch / "cli_stderr.txt";
  std::string command = shell_quote(cli_binary());
  for (const std::string& a : args) command += " " + shell_quote(a);
  command += " > " + shell_quote(out_path.string()) + " 2> " + shell_quote(err_path.string());
  const int status = std::system(command.c_str());

  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}

}  // namespace testutil
