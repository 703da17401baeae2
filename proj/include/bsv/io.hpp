#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <string>

namespace bsv {

std::string sha256_bytes(const void* data, std::size_t n);
std::string sha256_file(const std::filesystem::path& path);

// Plain comma-separated values, one line per matrix row, 17 significant
// digits so a reread reproduces the doubles exactly. Complex cells are
// rendered as re+imi / re-imi in one token.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXcd& m);

// Raw row-major float64 little-endian payload (complex entries interleaved
// re, im) plus a JSON sidecar with the shape, at the same stem with a .json
// extension. context_json, when non-empty, must be a serialized JSON object;
// it lands in the sidecar under "context" (grid, gain, solver, windows...).
void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                         const std::string& context_json = "");
void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXcd& m,
                         const std::string& context_json = "");
std::filesystem::path sidecar_path(const std::filesystem::path& binary_path);

// 8-bit binary PGM heatmap: |m| mapped linearly onto 0..255 with the largest
// magnitude at white. Plot data stays canonical in the CSV/binary files.
void render_heatmap_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& m);

// One run at a time per output directory: the constructor atomically creates
// <dir>/.lock and throws std::runtime_error if it already exists; the
// destructor removes it.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& directory);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace bsv
