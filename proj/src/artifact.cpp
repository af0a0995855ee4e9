#include "bsps/artifact.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "bsps/errors.hpp"

namespace bsps {

namespace {

constexpr char kPosteriorMagic[8] = {'B', 'S', 'P', 'S', 'P', 'O', 'S', 'T'};
constexpr char kVbMagic[8] = {'B', 'S', 'P', 'S', 'V', 'B', '_', '_'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.write(b, 4);
}

void put_u8(std::ostream& out, std::uint8_t v) {
  out.write(reinterpret_cast<const char*>(&v), 1);
}

void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}

void put_vec(std::ostream& out, const Eigen::VectorXd& v) {
  out.write(reinterpret_cast<const char*>(v.data()), 8 * v.size());
}

void put_mat_rowmajor(std::ostream& out, const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

std::uint32_t get_u32(std::istream& in) {
  char b[4];
  in.read(b, 4);
  if (!in) throw ArtifactMismatch("artifact truncated");
  std::uint32_t v;
  std::memcpy(&v, b, 4);
  return v;
}

std::uint8_t get_u8(std::istream& in) {
  char b;
  in.read(&b, 1);
  if (!in) throw ArtifactMismatch("artifact truncated");
  return static_cast<std::uint8_t>(b);
}

double get_f64(std::istream& in) {
  char b[8];
  in.read(b, 8);
  if (!in) throw ArtifactMismatch("artifact truncated");
  double v;
  std::memcpy(&v, b, 8);
  return v;
}

Eigen::VectorXd get_vec(std::istream& in, int n) {
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()), 8 * n);
  if (!in) throw ArtifactMismatch("artifact truncated");
  return v;
}

Eigen::MatrixXd get_mat_rowmajor(std::istream& in, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = get_f64(in);
  return m;
}

void check_magic(std::istream& in, const char (&magic)[8], const char* what) {
  char buf[8];
  in.read(buf, 8);
  if (!in || std::memcmp(buf, magic, 8) != 0)
    throw ArtifactMismatch(std::string("not a ") + what + " artifact");
}

std::string get_echo(std::istream& in) {
  const std::uint32_t len = get_u32(in);
  if (len > (1u << 20)) throw ArtifactMismatch("artifact echo too large");
  std::string echo(len, '\0');
  in.read(echo.data(), len);
  if (!in) throw ArtifactMismatch("artifact truncated");
  return echo;
}

}  // namespace

void write_posterior(std::ostream& out, const PosteriorArtifact& artifact) {
  const auto& samples = artifact.samples;
  if (samples.draws.empty()) throw EmptyData("write_posterior: no draws");
  const int n = samples.draws[0].n();
  const int J = samples.draws[0].num_agents();
  out.write(kPosteriorMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(artifact.config_echo.size()));
  out.write(artifact.config_echo.data(),
            static_cast<std::streamsize>(artifact.config_echo.size()));
  put_u8(out, samples.kind == ForecastKind::Gaussian ? 0 : 1);
  put_u8(out, 0);  // exponential kernel
  put_u32(out, static_cast<std::uint32_t>(n));
  put_u32(out, static_cast<std::uint32_t>(J));
  put_u32(out, static_cast<std::uint32_t>(samples.draws.size()));
  put_mat_rowmajor(out, artifact.train_coords);
  put_vec(out, samples.beta_bar);
  put_vec(out, samples.accept_rate);
  for (const auto& draw : samples.draws) {
    put_mat_rowmajor(out, draw.beta);
    put_mat_rowmajor(out, draw.f);
    put_f64(out, draw.sigma2);
    put_vec(out, draw.tau);
    put_vec(out, draw.g);
  }
  if (!out) throw ArtifactMismatch("write_posterior: stream failure");
}

PosteriorArtifact read_posterior(std::istream& in) {
  check_magic(in, kPosteriorMagic, "posterior");
  if (get_u32(in) != kVersion) throw ArtifactMismatch("unsupported posterior version");
  PosteriorArtifact artifact;
  artifact.config_echo = get_echo(in);
  const std::uint8_t kind = get_u8(in);
  if (kind > 1) throw ArtifactMismatch("unknown response kind");
  if (get_u8(in) != 0) throw ArtifactMismatch("unknown kernel family");
  const int n = static_cast<int>(get_u32(in));
  const int J = static_cast<int>(get_u32(in));
  const int n_draws = static_cast<int>(get_u32(in));
  if (n <= 0 || J < 0 || n_draws <= 0) throw ArtifactMismatch("bad posterior dimensions");
  artifact.train_coords = get_mat_rowmajor(in, n, 2);
  artifact.samples.kind = kind == 0 ? ForecastKind::Gaussian : ForecastKind::Bernoulli;
  artifact.samples.beta_bar = get_vec(in, J + 1);
  artifact.samples.accept_rate = get_vec(in, J + 1);
  artifact.samples.draws.resize(n_draws);
  for (auto& draw : artifact.samples.draws) {
    draw.beta = get_mat_rowmajor(in, n, J + 1);
    draw.f = get_mat_rowmajor(in, n, J);
    draw.sigma2 = get_f64(in);
    draw.tau = get_vec(in, J + 1);
    draw.g = get_vec(in, J + 1);
  }
  return artifact;
}

void write_vb(std::ostream& out, const VbArtifact& artifact) {
  const int n = static_cast<int>(artifact.mu[0].size());
  const int J = static_cast<int>(artifact.mu.size()) - 1;
  const int L = static_cast<int>(artifact.grid_eta.size());
  out.write(kVbMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(artifact.config_echo.size()));
  out.write(artifact.config_echo.data(),
            static_cast<std::streamsize>(artifact.config_echo.size()));
  put_u8(out, 0);  // exponential kernel
  put_u32(out, static_cast<std::uint32_t>(n));
  put_u32(out, static_cast<std::uint32_t>(J));
  put_u32(out, static_cast<std::uint32_t>(L));
  put_mat_rowmajor(out, artifact.train_coords);
  put_vec(out, artifact.beta_bar);
  put_vec(out, artifact.grid_eta);
  put_mat_rowmajor(out, artifact.p);
  for (int j = 0; j <= J; ++j) put_vec(out, artifact.mu[j]);
  for (int j = 0; j <= J; ++j) put_vec(out, artifact.sigma_diag[j]);
  put_mat_rowmajor(out, artifact.m);
  put_mat_rowmajor(out, artifact.s2);
  put_vec(out, artifact.a_tau);
  put_vec(out, artifact.b_tau);
  put_f64(out, artifact.a_sigma);
  put_f64(out, artifact.b_sigma);
  put_u8(out, artifact.converged ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(artifact.iterations));
  if (!out) throw ArtifactMismatch("write_vb: stream failure");
}

VbArtifact read_vb(std::istream& in) {
  check_magic(in, kVbMagic, "vb");
  if (get_u32(in) != kVersion) throw ArtifactMismatch("unsupported vb version");
  VbArtifact artifact;
  artifact.config_echo = get_echo(in);
  if (get_u8(in) != 0) throw ArtifactMismatch("unknown kernel family");
  const int n = static_cast<int>(get_u32(in));
  const int J = static_cast<int>(get_u32(in));
  const int L = static_cast<int>(get_u32(in));
  if (n <= 0 || J < 0 || L <= 0) throw ArtifactMismatch("bad vb dimensions");
  artifact.train_coords = get_mat_rowmajor(in, n, 2);
  artifact.beta_bar = get_vec(in, J + 1);
  artifact.grid_eta = get_vec(in, L);
  artifact.p = get_mat_rowmajor(in, J + 1, L);
  artifact.mu.resize(J + 1);
  artifact.sigma_diag.resize(J + 1);
  for (int j = 0; j <= J; ++j) artifact.mu[j] = get_vec(in, n);
  for (int j = 0; j <= J; ++j) artifact.sigma_diag[j] = get_vec(in, n);
  artifact.m = get_mat_rowmajor(in, n, J);
  artifact.s2 = get_mat_rowmajor(in, n, J);
  artifact.a_tau = get_vec(in, J + 1);
  artifact.b_tau = get_vec(in, J + 1);
  artifact.a_sigma = get_f64(in);
  artifact.b_sigma = get_f64(in);
  artifact.converged = get_u8(in) != 0;
  artifact.iterations = static_cast<int>(get_u32(in));
  return artifact;
}

ArtifactKind sniff_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactMismatch("cannot open artifact " + path);
  char buf[8];
  in.read(buf, 8);
  if (in && std::memcmp(buf, kPosteriorMagic, 8) == 0) return ArtifactKind::Posterior;
  if (in && std::memcmp(buf, kVbMagic, 8) == 0) return ArtifactKind::Vb;
  throw ArtifactMismatch(path + ": unrecognized artifact magic");
}

void write_posterior_file(const std::string& path, const PosteriorArtifact& artifact) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactMismatch("cannot write " + path);
  write_posterior(out, artifact);
}

PosteriorArtifact read_posterior_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactMismatch("cannot open artifact " + path);
  return read_posterior(in);
}

void write_vb_file(const std::string& path, const VbArtifact& artifact) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactMismatch("cannot write " + path);
  write_vb(out, artifact);
}

VbArtifact read_vb_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactMismatch("cannot open artifact " + path);
  return read_vb(in);
}

}  // namespace bsps
