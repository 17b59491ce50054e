#include "gpmm/lowrank.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <random>

#include "gpmm/error.hpp"

namespace gpmm {

namespace {

constexpr double kEigenvalueClamp = 1e-10;   // relative to the largest eigenvalue
constexpr double kIndefiniteAbort = 1e-2;    // relative; below this we only clamp

Eigen::Map<const Eigen::VectorXd> as_vector(const Eigen::Matrix3Xd& field) {
  return {field.data(), field.size()};
}

}  // namespace

Vec3 LowRankGP::mean_at(const SurfacePoint& sp) const {
  return interpolate_field(mean, reference->mesh(), sp);
}

Eigen::MatrixXd LowRankGP::basis_at(const SurfacePoint& sp) const {
  const Eigen::Vector3i tri = reference->mesh().triangles.col(sp.triangle);
  Eigen::MatrixXd rows(3, rank());
  rows = sp.barycentric[0] * basis.middleRows(3 * tri[0], 3) +
         sp.barycentric[1] * basis.middleRows(3 * tri[1], 3) +
         sp.barycentric[2] * basis.middleRows(3 * tri[2], 3);
  return rows;
}

Vec3 LowRankGP::evaluate(const Eigen::VectorXd& alpha, const SurfacePoint& sp) const {
  if (alpha.size() != rank())
    throw Error("evaluate: coefficient size " + std::to_string(alpha.size()) +
                " does not match rank " + std::to_string(rank()));
  return mean_at(sp) +
         basis_at(sp) * (variances.cwiseSqrt().cwiseProduct(alpha)).matrix();
}

Vec3 LowRankGP::evaluate_vertex(const Eigen::VectorXd& alpha, Eigen::Index vertex) const {
  if (alpha.size() != rank())
    throw Error("evaluate_vertex: coefficient size mismatch");
  return mean.col(vertex) +
         basis.middleRows(3 * vertex, 3) *
             (variances.cwiseSqrt().cwiseProduct(alpha)).matrix();
}

Eigen::Matrix3Xd LowRankGP::evaluate_all(const Eigen::VectorXd& alpha) const {
  if (alpha.size() != rank())
    throw Error("evaluate_all: coefficient size mismatch");
  Eigen::VectorXd stacked = basis * (variances.cwiseSqrt().cwiseProduct(alpha)).matrix();
  return mean + Eigen::Map<const Eigen::Matrix3Xd>(stacked.data(), 3, vertex_count());
}

Mat3 LowRankGP::pointwise_covariance(Eigen::Index vertex) const {
  const Eigen::MatrixXd rows = basis.middleRows(3 * vertex, 3);
  return rows * variances.asDiagonal() * rows.transpose();
}

Eigen::VectorXd LowRankGP::project(const Eigen::Matrix3Xd& field) const {
  const Eigen::Matrix3Xd centered = field - mean;
  Eigen::VectorXd alpha = basis.transpose() * as_vector(centered);
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    alpha[i] = variances[i] > 0.0 ? alpha[i] / std::sqrt(variances[i]) : 0.0;
  }
  return alpha;
}

std::vector<Eigen::Index> farthest_point_sample(const TriangleMesh& mesh, int m) {
  const Eigen::Index n = mesh.vertex_count();
  std::vector<Eigen::Index> picked;
  picked.reserve(static_cast<std::size_t>(m));
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::Index current = 0;
  for (int i = 0; i < m; ++i) {
    picked.push_back(current);
    dist = dist.cwiseMin(
        (mesh.vertices.colwise() - mesh.vertices.col(current)).colwise().squaredNorm().transpose());
    Eigen::Index next = 0;
    dist.maxCoeff(&next);  // first maximal entry: deterministic tie-break
    current = next;
  }
  return picked;
}

namespace {

struct Spectrum {
  Eigen::MatrixXd vectors;  // columns, descending eigenvalue order
  Eigen::VectorXd values;
};

// Descending-order eigendecomposition with the indefiniteness policy: small
// negative values are clamped to zero, large ones abort.
Spectrum psd_eigendecomposition(const Eigen::MatrixXd& gram_matrix, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram_matrix);
  if (solver.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": eigendecomposition failed");

  const Eigen::Index n = gram_matrix.rows();
  Spectrum s;
  s.values.resize(n);
  s.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.values[i] = solver.eigenvalues()[n - 1 - i];
    s.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }

  const double max_eig = std::max(s.values[0], 0.0);
  const double min_eig = s.values[n - 1];
  if (min_eig < -kIndefiniteAbort * std::max(max_eig, 1e-300)) {
    throw NumericalError(std::string(what) + ": Gram matrix indefinite (min " +
                         std::to_string(min_eig) + " vs max " + std::to_string(max_eig) + ")");
  }
  const double clamp = kEigenvalueClamp * max_eig;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.values[i] < clamp) s.values[i] = 0.0;
  }
  return s;
}

// Columns of fields scaled elementwise; returns orthonormal basis and
// variances of fields * fields^T via the small fields^T * fields problem.
void reorthonormalize(const Eigen::MatrixXd& fields, Eigen::MatrixXd& basis,
                      Eigen::VectorXd& variances) {
  if (fields.cols() == 0) {
    basis.resize(fields.rows(), 0);
    variances.resize(0);
    return;
  }
  const Eigen::MatrixXd small = fields.transpose() * fields;
  const Spectrum s = psd_eigendecomposition(small, "reorthonormalize");

  Eigen::Index kept = 0;
  while (kept < s.values.size() && s.values[kept] > 0.0) ++kept;

  variances = s.values.head(kept);
  basis.resize(fields.rows(), kept);
  for (Eigen::Index i = 0; i < kept; ++i) {
    basis.col(i) = fields * s.vectors.col(i) / std::sqrt(s.values[i]);
  }
}

}  // namespace

LowRankBuild build_low_rank(const MatrixKernel& kernel, const Eigen::Matrix3Xd& mean,
                            ReferencePtr reference, const NystromOptions& options) {
  const Eigen::Index n = reference->mesh().vertex_count();
  int m = options.points <= 0 ? static_cast<int>(n)
                              : std::min(options.points, static_cast<int>(n));
  if (options.rank > 3 * m)
    throw Error("build_low_rank: rank " + std::to_string(options.rank) +
                " exceeds 3m = " + std::to_string(3 * m));

  std::vector<Eigen::Index> sample_indices;
  if (m == static_cast<int>(n)) {
    sample_indices.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) sample_indices[static_cast<std::size_t>(i)] = i;
  } else if (options.uniform_random) {
    std::mt19937_64 rng(options.seed);
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < m; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) +
          static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n - i));
      std::swap(all[static_cast<std::size_t>(i)], all[j]);
    }
    sample_indices.assign(all.begin(), all.begin() + m);
  } else {
    sample_indices = farthest_point_sample(reference->mesh(), m);
  }

  Eigen::Matrix3Xd sampled(3, m);
  for (int i = 0; i < m; ++i)
    sampled.col(i) = reference->mesh().vertices.col(sample_indices[static_cast<std::size_t>(i)]);

  const Eigen::MatrixXd gram_mm = gram(kernel, sampled);
  const Spectrum spectrum = psd_eigendecomposition(gram_mm, "build_low_rank");

  Eigen::Index kept = 0;
  while (kept < spectrum.values.size() && spectrum.values[kept] > 0.0) ++kept;

  // Nystrom extension of the kept eigenvectors to every vertex.
  Eigen::MatrixXd fields;  // 3n x kept, columns sqrt(lambda_i) * phi_i
  if (m == static_cast<int>(n)) {
    fields = spectrum.vectors.leftCols(kept) *
             spectrum.values.head(kept).cwiseSqrt().asDiagonal();
  } else {
    const Eigen::MatrixXd gram_nm = gram(kernel, reference->mesh().vertices, sampled);
    fields = gram_nm * spectrum.vectors.leftCols(kept) *
             spectrum.values.head(kept).cwiseInverse().cwiseSqrt().asDiagonal();
  }

  LowRankBuild result;
  result.nystrom_points = m;
  result.model.reference = std::move(reference);
  result.model.mean = mean.size() == 0 ? Eigen::Matrix3Xd::Zero(3, n) : mean;
  if (result.model.mean.cols() != n)
    throw Error("build_low_rank: mean field has " + std::to_string(result.model.mean.cols()) +
                " vertices, reference has " + std::to_string(n));

  reorthonormalize(fields, result.model.basis, result.model.variances);

  // Rank selection against the approximated spectrum mass.
  const double total = result.model.variances.sum();
  Eigen::Index keep = result.model.variances.size();
  if (total > 0.0 && options.variance_fraction < 1.0) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < result.model.variances.size(); ++i) {
      acc += result.model.variances[i];
      if (acc / total >= options.variance_fraction) {
        keep = i + 1;
        break;
      }
    }
  }
  if (options.rank > 0) keep = std::min<Eigen::Index>(keep, options.rank);

  result.retained_variance =
      total > 0.0 ? result.model.variances.head(keep).sum() / total : 1.0;
  result.model.basis = result.model.basis.leftCols(keep).eval();
  result.model.variances = result.model.variances.head(keep).eval();
  return result;
}

Eigen::VectorXd sample_coefficients(const LowRankGP& gp, std::uint64_t seed) {
  const Eigen::Index r = gp.rank();
  Eigen::VectorXd alpha(r);
  std::mt19937_64 rng(seed);
  // Box-Muller on exto-53-bit uniforms; avoids the implementation-defined
  // std::normal_distribution so draws are identical across toolchains.
  auto unit = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  for (Eigen::Index i = 0; i < r; i += 2) {
    const double u1 = 1.0 - unit();  // (0, 1], keeps log finite
    const double u2 = unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    alpha[i] = radius * std::cos(2.0 * M_PI * u2);
    if (i + 1 < r) alpha[i + 1] = radius * std::sin(2.0 * M_PI * u2);
  }
  return alpha;
}

double log_prior(const Eigen::VectorXd& alpha) { return -alpha.squaredNorm(); }

LowRankGP posterior(const LowRankGP& gp, const std::vector<LandmarkObservation>& observations) {
  if (observations.empty()) throw Error("posterior: no observations");
  const Eigen::Index r = gp.rank();

  // Coefficient-space regression: alpha ~ N(0, I), obs = Q alpha + noise.
  Eigen::MatrixXd information = Eigen::MatrixXd::Identity(r, r);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
  const Eigen::VectorXd sqrt_var = gp.variances.cwiseSqrt();
  for (const LandmarkObservation& obs : observations) {
    if (obs.sigma <= 0.0) throw Error("posterior: observation sigma must be > 0");
    const SurfacePoint sp = gp.reference->locate(obs.reference_point);
    const Eigen::MatrixXd q = gp.basis_at(sp) * sqrt_var.asDiagonal();
    const double inv_noise = 1.0 / (obs.sigma * obs.sigma);
    information.noalias() += inv_noise * q.transpose() * q;
    rhs.noalias() += inv_noise * q.transpose() * (obs.deformation - gp.mean_at(sp));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(information);
  if (solver.info() != Eigen::Success)
    throw NumericalError("posterior: eigendecomposition failed");
  // Information eigenvalues are >= 1 in exact arithmetic; the floor keeps
  // the posterior variance within the prior under roundoff.
  const Eigen::VectorXd info_eigs = solver.eigenvalues().cwiseMax(1.0);
  const Eigen::MatrixXd v = solver.eigenvectors();

  const Eigen::VectorXd mean_coeff =
      v * info_eigs.cwiseInverse().asDiagonal() * (v.transpose() * rhs);

  LowRankGP post;
  post.reference = gp.reference;
  Eigen::VectorXd mean_shift = gp.basis * sqrt_var.cwiseProduct(mean_coeff);
  post.mean = gp.mean + Eigen::Map<const Eigen::Matrix3Xd>(mean_shift.data(), 3,
                                                           gp.vertex_count());

  // Covariance Q Sigma Q^T re-diagonalized into KL form.
  const Eigen::MatrixXd fields = gp.basis * sqrt_var.asDiagonal() * v *
                                 info_eigs.cwiseInverse().cwiseSqrt().asDiagonal();
  reorthonormalize(fields, post.basis, post.variances);
  return post;
}

}  // namespace gpmm
