#pragma once

// Shared helpers for tests that shell out to the command-line tool.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace testsupport {

// Path to the built CLI binary: injected by CTest via the environment, with
// a fallback to the sibling build location for direct invocations.
inline std::string cli_path() {
  const char* path = std::getenv("PGLAB_CLI");
  if (path != nullptr && *path != '\0') return path;
  const std::filesystem::path sibling =
      std::filesystem::read_symlink("/proc/self/exe").parent_path().parent_path() / "tools" /
      "pglab";
  if (std::filesystem::exists(sibling)) return sibling.string();
  throw std::runtime_error("PGLAB_CLI is not set and no sibling tools/pglab binary was found");
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout only; stderr is discarded
};

// Runs a shell command, capturing stdout and the exit code.
inline RunResult run_command(const std::string& command) {
  const std::string wrapped = command + " 2>/dev/null";
  FILE* pipe = ::popen(wrapped.c_str(), "r");
  if (pipe == nullptr) {
    throw std::runtime_error("popen failed for: " + command);
  }
  RunResult result;
  char buffer[4096];
  size_t got = 0;
  while ((got = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) {
    result.output.append(buffer, got);
  }
  const int status = ::pclose(pipe);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  }
  return result;
}

// Process-unique scratch directory, created on first use.
inline std::filesystem::path scratch_dir() {
  static const std::filesystem::path dir = [] {
    auto path = std::filesystem::temp_directory_path() /
                ("pglab-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
    return path;
  }();
  return dir;
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

}  // namespace testsupport
