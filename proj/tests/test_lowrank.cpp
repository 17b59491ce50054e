#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <fstream>
#include <random>
#include <sstream>

#include "gpmm/lowrank.hpp"
#include "gpmm/model_io.hpp"
#include "support/test_meshes.hpp"

using namespace gpmm;
using namespace testsupport;

namespace {

ReferencePtr small_sphere() {
  return make_reference(uv_sphere(20.0, 9, 22));  // exactly 200 vertices
}

LowRankGP se_model(const ReferencePtr& surface, double scaling = 25.0, double sigma = 8.0) {
  const auto kernel = isotropic(squared_exponential(scaling, sigma));
  NystromOptions options;
  options.variance_fraction = 1.0;
  return build_low_rank(*kernel, {}, surface, options).model;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out(std::ios::binary);
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("full-sample build reproduces the dense Gram matrix") {
  const ReferencePtr surface = small_sphere();
  const auto kernel = multiscale_bspline(-5, -4, {60.0, 30.0});
  NystromOptions options;
  options.variance_fraction = 1.0;
  const LowRankBuild build = build_low_rank(*kernel, {}, surface, options);

  const Eigen::MatrixXd dense = gram(*kernel, surface->mesh().vertices);
  const Eigen::MatrixXd reconstructed = build.model.basis *
                                        build.model.variances.asDiagonal() *
                                        build.model.basis.transpose();
  CHECK((reconstructed - dense).norm() / dense.norm() < 1e-6);

  SUBCASE("variances descend and basis columns are orthonormal") {
    for (Eigen::Index i = 1; i < build.model.rank(); ++i)
      CHECK(build.model.variances[i] <= build.model.variances[i - 1]);
    const Eigen::MatrixXd gram_basis = build.model.basis.transpose() * build.model.basis;
    CHECK((gram_basis - Eigen::MatrixXd::Identity(build.model.rank(), build.model.rank()))
              .cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("truncation keeps the top of the dense spectrum") {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense, Eigen::EigenvaluesOnly);
    const Eigen::Index r = std::min<Eigen::Index>(20, build.model.rank());
    for (Eigen::Index i = 0; i < r; ++i) {
      const double dense_eig = solver.eigenvalues()[dense.rows() - 1 - i];
      CHECK(build.model.variances[i] ==
            doctest::Approx(dense_eig).epsilon(1e-6));
    }
  }
}

TEST_CASE("zero kernel builds a rank-0 model that evaluates to the mean") {
  const ReferencePtr surface = small_sphere();
  Eigen::Matrix3Xd mean(3, surface->mesh().vertex_count());
  mean.setConstant(1.5);
  const LowRankBuild build = build_low_rank(*zero_matrix_kernel(), mean, surface, {});
  CHECK(build.model.rank() == 0);
  CHECK(build.retained_variance == 1.0);
  const Eigen::Matrix3Xd field = build.model.evaluate_all(Eigen::VectorXd());
  CHECK((field - mean).norm() == 0.0);
}

TEST_CASE("separable rank-1 kernel yields exactly 3 modes") {
  const ReferencePtr surface = small_sphere();
  const auto kernel = isotropic(outer([](const Vec3& p) { return 1.0 + 0.1 * p[0]; }));
  NystromOptions options;
  options.variance_fraction = 1.0;
  const LowRankBuild build = build_low_rank(*kernel, {}, surface, options);
  CHECK(build.model.rank() == 3);
}

TEST_CASE("variance-fraction truncation reports what it kept") {
  const ReferencePtr surface = small_sphere();
  const auto kernel = isotropic(squared_exponential(25.0, 10.0));
  NystromOptions options;
  options.variance_fraction = 0.99;
  const LowRankBuild build = build_low_rank(*kernel, {}, surface, options);
  CHECK(build.retained_variance >= 0.99);
  CHECK(build.model.rank() < 3 * surface->mesh().vertex_count());

  NystromOptions capped = options;
  capped.rank = 5;
  const LowRankBuild small = build_low_rank(*kernel, {}, surface, capped);
  CHECK(small.model.rank() == 5);
}

TEST_CASE("Nystrom subsampling approximates the full build") {
  const ReferencePtr surface = small_sphere();
  const auto kernel = isotropic(squared_exponential(25.0, 12.0));
  NystromOptions full_opts;
  full_opts.variance_fraction = 1.0;
  const LowRankGP full = build_low_rank(*kernel, {}, surface, full_opts).model;

  NystromOptions sub_opts;
  sub_opts.points = 80;
  sub_opts.rank = 10;
  const LowRankGP sub = build_low_rank(*kernel, {}, surface, sub_opts).model;

  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK(sub.variances[i] == doctest::Approx(full.variances[i]).epsilon(0.05));
  }
}

TEST_CASE("farthest point sampling is deterministic and starts at vertex 0") {
  const TriangleMesh mesh = uv_sphere(10.0, 6, 8);
  const auto a = farthest_point_sample(mesh, 10);
  const auto b = farthest_point_sample(mesh, 10);
  CHECK(a == b);
  CHECK(a[0] == 0);
  // All distinct.
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) CHECK(a[i] != a[j]);
  }
}

TEST_CASE("evaluate is exactly linear in the coefficients") {
  const ReferencePtr surface = small_sphere();
  const LowRankGP model = se_model(surface);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::VectorXd a(model.rank()), b(model.rank());
  for (Eigen::Index i = 0; i < model.rank(); ++i) {
    a[i] = normal(rng);
    b[i] = normal(rng);
  }

  SUBCASE("alpha = 0 gives the mean") {
    const SurfacePoint sp = surface->locate(surface->mesh().vertices.col(7));
    CHECK((model.evaluate(Eigen::VectorXd::Zero(model.rank()), sp) - model.mean_at(sp))
              .norm() == 0.0);
  }

  SUBCASE("alpha = e_i adds one scaled basis field") {
    Eigen::VectorXd ei = Eigen::VectorXd::Zero(model.rank());
    ei[2] = 1.0;
    const Eigen::Index v = 11;
    const Vec3 expected = model.mean.col(v) +
                          std::sqrt(model.variances[2]) *
                              Vec3(model.basis(3 * v + 0, 2), model.basis(3 * v + 1, 2),
                                   model.basis(3 * v + 2, 2));
    CHECK((model.evaluate_vertex(ei, v) - expected).norm() < 1e-15);
  }

  SUBCASE("evaluate(a+b) - evaluate(b) == evaluate(a) - evaluate(0)") {
    const Eigen::Matrix3Xd lhs = model.evaluate_all(a + b) - model.evaluate_all(b);
    const Eigen::Matrix3Xd rhs = model.evaluate_all(a) - model.evaluate_all(Eigen::VectorXd::Zero(model.rank()));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("log prior") {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  CHECK(log_prior(zero) == 0.0);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
  e1[0] = 1.0;
  CHECK(log_prior(e1) == -1.0);
  Eigen::VectorXd flipped = e1;
  flipped[0] = -1.0;
  CHECK(log_prior(flipped) == log_prior(e1));
}

TEST_CASE("coefficient sampling is seeded and standard normal") {
  const ReferencePtr surface = small_sphere();
  LowRankGP model = se_model(surface);

  SUBCASE("same seed, same draw") {
    CHECK(sample_coefficients(model, 42) == sample_coefficients(model, 42));
    CHECK(sample_coefficients(model, 42) != sample_coefficients(model, 43));
  }

  SUBCASE("moments over 1e5 draws") {
    const int draws = 100000;
    const Eigen::Index r = std::min<Eigen::Index>(model.rank(), 8);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(r);
    Eigen::VectorXd second = Eigen::VectorXd::Zero(r);
    for (int d = 0; d < draws; ++d) {
      const Eigen::VectorXd alpha = sample_coefficients(model, static_cast<std::uint64_t>(d));
      mean += alpha.head(r);
      second += alpha.head(r).cwiseAbs2();
    }
    mean /= draws;
    second /= draws;
    for (Eigen::Index i = 0; i < r; ++i) {
      CHECK(std::abs(mean[i]) < 0.02);
      CHECK(std::abs(second[i] - mean[i] * mean[i] - 1.0) < 0.05);
    }
  }

  SUBCASE("empirical pointwise covariance matches the analytic one") {
    const Eigen::Index v = 31;
    const Mat3 analytic = model.pointwise_covariance(v);
    Mat3 empirical = Mat3::Zero();
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
      const Eigen::VectorXd alpha = sample_coefficients(model, 1000 + static_cast<std::uint64_t>(d));
      const Vec3 u = model.evaluate_vertex(alpha, v) - model.mean.col(v);
      empirical += u * u.transpose();
    }
    empirical /= draws;
    CHECK((empirical - analytic).norm() / analytic.norm() < 0.1);
  }
}

TEST_CASE("posterior regression") {
  const ReferencePtr surface = small_sphere();
  const LowRankGP prior = se_model(surface);
  std::mt19937_64 rng(5);

  const Eigen::VectorXd truth_alpha = sample_coefficients(prior, 77);
  const Eigen::Matrix3Xd truth_field = prior.evaluate_all(truth_alpha);
  const std::vector<Eigen::Index> lm_vertices{3, 57, 140};

  SUBCASE("tight noise interpolates the observations") {
    std::vector<LandmarkObservation> obs;
    for (const Eigen::Index v : lm_vertices)
      obs.push_back({surface->mesh().vertices.col(v), truth_field.col(v), 1e-4});
    const LowRankGP post = posterior(prior, obs);
    for (const Eigen::Index v : lm_vertices)
      CHECK((post.mean.col(v) - truth_field.col(v)).norm() < 1e-2);
  }

  SUBCASE("posterior mean matches dense Gaussian regression") {
    // Function-space oracle on the same full-rank model:
    //   mu_p = K_xX (K_XX + s^2 I)^-1 y
    const auto kernel = squared_exponential(25.0, 8.0);
    const double noise = 0.5;
    std::vector<LandmarkObservation> obs;
    for (const Eigen::Index v : lm_vertices)
      obs.push_back({surface->mesh().vertices.col(v), truth_field.col(v), noise});
    const LowRankGP post = posterior(prior, obs);

    const int m = static_cast<int>(lm_vertices.size());
    Eigen::MatrixXd k_xx(3 * m, 3 * m);
    Eigen::VectorXd y(3 * m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        k_xx.block<3, 3>(3 * i, 3 * j) =
            (*kernel)(surface->mesh().vertices.col(lm_vertices[static_cast<std::size_t>(i)]),
                      surface->mesh().vertices.col(lm_vertices[static_cast<std::size_t>(j)])) *
            Mat3::Identity();
      }
      y.segment<3>(3 * i) = truth_field.col(lm_vertices[static_cast<std::size_t>(i)]);
    }
    k_xx += noise * noise * Eigen::MatrixXd::Identity(3 * m, 3 * m);
    const Eigen::VectorXd weights = k_xx.ldlt().solve(y);

    for (Eigen::Index v = 0; v < surface->mesh().vertex_count(); v += 13) {
      Vec3 oracle = Vec3::Zero();
      for (int i = 0; i < m; ++i) {
        oracle += (*kernel)(surface->mesh().vertices.col(v),
                            surface->mesh().vertices.col(lm_vertices[static_cast<std::size_t>(i)])) *
                  weights.segment<3>(3 * i);
      }
      CHECK((post.mean.col(v) - oracle).norm() < 1e-3);
    }
  }

  SUBCASE("uninformative observations leave the mean in place") {
    std::vector<LandmarkObservation> obs;
    obs.push_back({surface->mesh().vertices.col(3), prior.mean.col(3), 1e6});
    const LowRankGP post = posterior(prior, obs);
    CHECK((post.mean - prior.mean).cwiseAbs().maxCoeff() < 1e-3);
  }

  SUBCASE("pointwise variance never grows") {
    std::vector<LandmarkObservation> obs;
    for (const Eigen::Index v : lm_vertices)
      obs.push_back({surface->mesh().vertices.col(v), truth_field.col(v), 0.1});
    const LowRankGP post = posterior(prior, obs);

    std::uniform_int_distribution<Eigen::Index> pick(0, surface->mesh().vertex_count() - 1);
    for (int i = 0; i < 100; ++i) {
      const Eigen::Index v = pick(rng);
      CHECK(post.pointwise_covariance(v).trace() <=
            prior.pointwise_covariance(v).trace() + 1e-9);
    }
  }

  SUBCASE("no observations is an error") {
    CHECK_THROWS(posterior(prior, {}));
  }
}

TEST_CASE("projection inverts evaluation") {
  const ReferencePtr surface = small_sphere();
  const LowRankGP model = se_model(surface);
  const Eigen::VectorXd alpha = sample_coefficients(model, 9);
  const Eigen::VectorXd recovered = model.project(model.evaluate_all(alpha));
  // Matches the 1e-6 orthonormality tolerance of the basis.
  CHECK((recovered - alpha).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("prior container round trip") {
  const ReferencePtr surface = make_reference(uv_sphere(15.0, 5, 8));
  LowRankGP model = se_model(surface, 9.0, 6.0);
  TempDir dir("container");

  save_prior(model, dir.file("prior.gpmm"));
  const LowRankGP loaded = load_prior(dir.file("prior.gpmm"));

  CHECK(loaded.rank() == model.rank());
  CHECK(loaded.vertex_count() == model.vertex_count());
  for (Eigen::Index i = 0; i < model.rank(); ++i) {
    CHECK(loaded.variances[i] ==
          static_cast<double>(static_cast<float>(model.variances[i])));
  }
  CHECK(loaded.basis(5, 0) == static_cast<double>(static_cast<float>(model.basis(5, 0))));

  // Bit-exact second generation.
  save_prior(loaded, dir.file("prior2.gpmm"));
  const LowRankGP loaded2 = load_prior(dir.file("prior2.gpmm"));
  save_prior(loaded2, dir.file("prior3.gpmm"));
  CHECK(file_bytes(dir.file("prior2.gpmm")) == file_bytes(dir.file("prior3.gpmm")));

  CHECK(container_type(dir.file("prior.gpmm")) == "gpmm-prior");
}
