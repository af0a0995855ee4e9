#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "bsps/gibbs.hpp"
#include "bsps/vb.hpp"

namespace bsps {

// Self-describing binary artifacts, little-endian IEEE-754 doubles.
// Posterior layout (byte order as written):
//   magic "BSPSPOST" | u32 version=1 | u32 echo_len | echo bytes
//   u8 kind (0 gaussian, 1 binary) | u8 kernel (0 exponential)
//   u32 n | u32 J | u32 n_draws
//   train coords (n x 2, row-major) | beta_bar (J+1) | accept_rate (J+1)
//   per draw: beta (n x (J+1), row-major) | f (n x J, row-major)
//             | sigma2 | tau (J+1) | g (J+1)
struct PosteriorArtifact {
  PosteriorSamples samples;
  Eigen::MatrixX2d train_coords;
  std::string config_echo;
};

void write_posterior(std::ostream& out, const PosteriorArtifact& artifact);
PosteriorArtifact read_posterior(std::istream& in);

// VB layout:
//   magic "BSPSVB__" | u32 version=1 | u32 echo_len | echo bytes | u8 kernel
//   u32 n | u32 J | u32 L
//   train coords (n x 2) | beta_bar (J+1) | grid eta (L)
//   p ((J+1) x L, row-major) | mu (field-major, (J+1) x n)
//   Sigma diagonals (field-major) | m (n x J, row-major) | s2 (n x J)
//   a_tau (J+1) | b_tau (J+1) | a_sigma | b_sigma | u8 converged | u32 iterations
struct VbArtifact {
  Eigen::MatrixX2d train_coords;
  Eigen::VectorXd beta_bar;
  Eigen::VectorXd grid_eta;
  Eigen::MatrixXd p;                     // (J+1) x L
  std::vector<Eigen::VectorXd> mu;       // J+1
  std::vector<Eigen::VectorXd> sigma_diag;
  Eigen::MatrixXd m, s2;                 // n x J
  Eigen::VectorXd a_tau, b_tau;
  double a_sigma = 0.0, b_sigma = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string config_echo;
};

void write_vb(std::ostream& out, const VbArtifact& artifact);
VbArtifact read_vb(std::istream& in);

// Distinguishes the two artifact kinds by magic; throws ArtifactMismatch on
// anything else.
enum class ArtifactKind { Posterior, Vb };
ArtifactKind sniff_artifact(const std::string& path);

void write_posterior_file(const std::string& path, const PosteriorArtifact& artifact);
PosteriorArtifact read_posterior_file(const std::string& path);
void write_vb_file(const std::string& path, const VbArtifact& artifact);
VbArtifact read_vb_file(const std::string& path);

}  // namespace bsps
