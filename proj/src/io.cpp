#include "bsv/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

// The binary format promises little-endian doubles; raw memory writes below
// rely on the host already being one.
static_assert(std::endian::native == std::endian::little,
              "binary matrix output assumes a little-endian host");

namespace bsv {

namespace {

std::string digest_to_hex(const unsigned char* digest, unsigned int len) {
  static const char hex[] = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void format_double(std::string& line, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  line += buf;
}

void format_complex(std::string& line, const std::complex<double>& z) {
  char buf[88];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
  line += buf;
}

template <typename Matrix, typename Cell>
void write_csv(const std::filesystem::path& path, const Matrix& m, Cell cell) {
  auto out = open_for_write(path, std::ios::out | std::ios::trunc);
  std::string line;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) line += ',';
      cell(line, m(r, c));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_payload_and_sidecar(const std::filesystem::path& path, const double* data,
                               std::size_t n_values, Eigen::Index rows, Eigen::Index cols,
                               bool is_complex, const std::string& context_json) {
  {
    auto out = open_for_write(path, std::ios::out | std::ios::trunc | std::ios::binary);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(n_values * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing " + path.string());
  }
  auto meta = open_for_write(sidecar_path(path), std::ios::out | std::ios::trunc);
  meta << "{\n"
       << "  \"file\": \"" << path.filename().string() << "\",\n"
       << "  \"rows\": " << rows << ",\n"
       << "  \"cols\": " << cols << ",\n"
       << "  \"dtype\": \"float64\",\n"
       << "  \"byte_order\": \"little-endian\",\n"
       << "  \"layout\": \"row-major\",\n"
       << "  \"complex\": " << (is_complex ? "true" : "false");
  if (is_complex) meta << ",\n  \"interleave\": \"re,im\"";
  if (!context_json.empty()) meta << ",\n  \"context\": " << context_json;
  meta << "\n}\n";
  if (!meta) throw std::runtime_error("failed writing " + sidecar_path(path).string());
}

}  // namespace

std::string sha256_bytes(const void* data, std::size_t n) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, n, digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  return digest_to_hex(digest, len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::in | std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("sha256 context allocation failed");
  std::vector<char> buf(1 << 16);
  std::string result;
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1) {
    bool ok = true;
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      const std::streamsize got = in.gcount();
      if (got > 0 && EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(got)) != 1) {
        ok = false;
        break;
      }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (ok && EVP_DigestFinal_ex(ctx, digest, &len) == 1) result = digest_to_hex(digest, len);
  }
  EVP_MD_CTX_free(ctx);
  if (result.empty()) throw std::runtime_error("sha256 of " + path.string() + " failed");
  return result;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  write_csv(path, m, [](std::string& line, double x) { format_double(line, x); });
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXcd& m) {
  write_csv(path, m,
            [](std::string& line, const std::complex<double>& z) { format_complex(line, z); });
}

std::filesystem::path sidecar_path(const std::filesystem::path& binary_path) {
  std::filesystem::path p = binary_path;
  p.replace_extension(".json");
  return p;
}

void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                         const std::string& context_json) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = m;
  write_payload_and_sidecar(path, rm.data(), static_cast<std::size_t>(rm.size()), m.rows(),
                            m.cols(), false, context_json);
}

void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXcd& m,
                         const std::string& context_json) {
  using RowMajor =
      Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = m;
  write_payload_and_sidecar(path, reinterpret_cast<const double*>(rm.data()),
                            2 * static_cast<std::size_t>(rm.size()), m.rows(), m.cols(), true,
                            context_json);
}

void render_heatmap_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  const double peak = m.cwiseAbs().maxCoeff();
  auto out = open_for_write(path, std::ios::out | std::ios::trunc | std::ios::binary);
  out << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = peak > 0 ? std::abs(m(r, c)) / peak : 0.0;
      row[static_cast<std::size_t>(c)] = static_cast<unsigned char>(255.0 * v + 0.5);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

OutputLock::OutputLock(const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  path_ = directory / ".lock";
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    path_.clear();
    throw std::runtime_error("output directory is locked (found " +
                             (directory / ".lock").string() +
                             "); another run may be active");
  }
  ::close(fd);
}

OutputLock::~OutputLock() {
  if (!path_.empty()) {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

}  // namespace bsv
