#include "ips/exact.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SparseLU>

namespace ips {

GeneratorMatrix::GeneratorMatrix(Sparse q, int spins, int sites)
    : q_(std::move(q)), spins_(spins), sites_(sites), max_exit_(0.0) {
  q_.makeCompressed();
  qt_ = Sparse(q_.transpose());
  qt_.makeCompressed();
  for (Eigen::Index r = 0; r < q_.outerSize(); ++r)
    for (Sparse::InnerIterator it(q_, r); it; ++it)
      if (it.col() == r) max_exit_ = std::max(max_exit_, -it.value());
}

GeneratorMatrix build_generator(const RateModel& model, const Volume& volume) {
  check_compatible(model, volume);
  const StateIndex states = volume.state_count();
  const int n = volume.site_count();
  const int q = volume.q();

  std::vector<StateIndex> stride(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) stride[static_cast<std::size_t>(s)] = site_stride(s, q);

  std::vector<Eigen::Triplet<double, StateIndex>> triplets;
  triplets.reserve(static_cast<std::size_t>(states) * static_cast<std::size_t>(n * (q - 1) + 1));
  SpinConfig config(static_cast<std::size_t>(n), 0);
  for (StateIndex a = 0; a < states; ++a) {
    double exit = 0.0;
    for (int x = 0; x < n; ++x) {
      const LocalView view(volume, config, x);
      const Spin own = config[static_cast<std::size_t>(x)];
      for (Spin j = 0; j < q; ++j) {
        if (j == own) continue;
        const double r = model.rate(view, j);
        if (r < 0.0 || !std::isfinite(r)) throw InvalidArgument("model produced an invalid rate");
        if (r == 0.0) continue;
        const StateIndex b = a + static_cast<StateIndex>(j) * stride[static_cast<std::size_t>(x)] -
                             static_cast<StateIndex>(own) * stride[static_cast<std::size_t>(x)];
        triplets.emplace_back(a, b, r);
        exit += r;
      }
    }
    if (exit != 0.0) triplets.emplace_back(a, a, -exit);
    for (int s = 0; s < n; ++s) {
      if (++config[static_cast<std::size_t>(s)] < q) break;
      config[static_cast<std::size_t>(s)] = 0;
    }
  }
  GeneratorMatrix::Sparse m(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return GeneratorMatrix(std::move(m), q, n);
}

Distribution evolve(const Distribution& dist, const GeneratorMatrix& gen, double t, double tol, EvolveStats* stats) {
  if (!(tol > 0.0)) throw InvalidArgument("evolution tolerance must be positive");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be finite and non-negative");
  if (dist.size() != gen.size()) throw InvalidArgument("distribution and generator sizes differ");
  EvolveStats local;
  const double rate = gen.max_exit_rate();
  local.uniformization_rate = rate;
  if (t == 0.0 || rate == 0.0) {
    if (stats) *stats = local;
    return dist;
  }

  const double lambda = rate * t;
  const double log_lambda = std::log(lambda);
  Eigen::VectorXd v = dist.weights();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(v.size());
  double log_w = -lambda;  // log Poisson(0; lambda)
  for (int k = 0;; ++k) {
    const double w = std::exp(log_w);
    if (w > 0.0) acc.noalias() += w * v;
    const double log_next = log_w + log_lambda - std::log(static_cast<double>(k + 1));
    if (static_cast<double>(k + 2) > lambda) {
      const double bound = std::exp(log_next) / (1.0 - lambda / static_cast<double>(k + 2));
      if (bound < tol) {
        local.tail_bound = bound;
        local.terms = k;
        break;
      }
    }
    v += gen.transpose() * v / rate;
    log_w = log_next;
  }
  for (Eigen::Index i = 0; i < acc.size(); ++i)
    if (acc[i] < 0.0) acc[i] = 0.0;
  const double total = acc.sum();
  local.drift = std::abs(1.0 - total);
  acc /= total;
  if (stats) *stats = local;
  return Distribution(dist.q(), dist.sites(), std::move(acc));
}

namespace {

double residual_of(const GeneratorMatrix& gen, const Eigen::VectorXd& v) { return gen.apply(v).lpNorm<1>(); }

Eigen::VectorXd clip_normalize(Eigen::VectorXd v) {
  v = v.cwiseMax(0.0);
  const double s = v.sum();
  if (s > 0.0) v /= s;
  return v;
}

}  // namespace

Distribution stationary(const GeneratorMatrix& gen, double tol, StationaryStats* stats, int max_iterations) {
  if (!(tol > 0.0)) throw InvalidArgument("stationary tolerance must be positive");
  const auto n = static_cast<Eigen::Index>(gen.size());
  StationaryStats local;

  if (n == 1) {
    if (stats) *stats = local;
    return Distribution(gen.q(), gen.sites(), Eigen::VectorXd::Ones(1));
  }

  if (gen.size() <= (StateIndex{1} << 16)) {
    // Q^T pi = 0 with the last equation replaced by sum(pi) = 1.
    std::vector<Eigen::Triplet<double>> trip;
    const auto& qt = gen.transpose();
    for (Eigen::Index r = 0; r < n - 1; ++r)
      for (GeneratorMatrix::Sparse::InnerIterator it(qt, r); it; ++it) trip.emplace_back(r, it.col(), it.value());
    for (Eigen::Index c = 0; c < n; ++c) trip.emplace_back(n - 1, c, 1.0);
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() == Eigen::Success) {
      Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
      b[n - 1] = 1.0;
      Eigen::VectorXd pi = clip_normalize(lu.solve(b));
      const double res = residual_of(gen, pi);
      if (lu.info() == Eigen::Success && res < tol) {
        local.residual = res;
        local.direct = true;
        if (stats) *stats = local;
        return Distribution(gen.q(), gen.sites(), std::move(pi));
      }
    }
  }

  const double rate = 1.1 * gen.max_exit_rate();
  if (rate == 0.0) throw NotConverged("generator is zero; every distribution is stationary");
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd x1, x2;
  auto step = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v + gen.transpose() * v / rate; };
  double res = residual_of(gen, x0);
  int it = 0;
  while (res >= tol && it < max_iterations) {
    for (int k = 0; k < 100; ++k) {
      x1 = step(x0);
      x2 = step(x1);
      x0 = step(x2);
      it += 3;
    }
    // Aitken delta-squared on the last three iterates, kept only if it helps.
    x1 = step(x0);
    x2 = step(x1);
    Eigen::VectorXd acc(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double denom = x2[i] - 2.0 * x1[i] + x0[i];
      acc[i] = std::abs(denom) > 1e-300 ? x2[i] - (x2[i] - x1[i]) * (x2[i] - x1[i]) / denom : x2[i];
    }
    acc = clip_normalize(acc);
    x0 = clip_normalize(x2);
    it += 2;
    res = residual_of(gen, x0);
    const double acc_res = residual_of(gen, acc);
    if (acc_res < res) {
      x0 = std::move(acc);
      res = acc_res;
    }
  }
  local.residual = res;
  local.iterations = it;
  if (stats) *stats = local;
  if (res >= tol) throw NotConverged("stationary solve stopped at residual " + std::to_string(res));
  return Distribution(gen.q(), gen.sites(), std::move(x0));
}

double stationarity_residual(const GeneratorMatrix& gen, const Distribution& dist) {
  if (dist.size() != gen.size()) throw InvalidArgument("distribution and generator sizes differ");
  return residual_of(gen, dist.weights());
}

double stationarity_residual(const RateModel& model, const Volume& volume, const ProductMeasure& mu) {
  if (mu.sites() != volume.site_count() || mu.q() != volume.q())
    throw InvalidArgument("product measure does not live on this volume");
  return stationarity_residual(build_generator(model, volume), mu.expand());
}

double relative_entropy(const Distribution& nu, const Distribution& pi) {
  if (nu.size() != pi.size()) throw InvalidArgument("distributions live on different spaces");
  double h = 0.0;
  for (StateIndex i = 0; i < nu.size(); ++i) {
    const double a = nu[i];
    if (a == 0.0) continue;
    if (pi[i] == 0.0) return std::numeric_limits<double>::infinity();
    h += a * std::log(a / pi[i]);
  }
  return h;
}

double l1_distance(const Distribution& a, const Distribution& b) {
  if (a.size() != b.size()) throw InvalidArgument("distributions live on different spaces");
  return (a.weights() - b.weights()).lpNorm<1>();
}

}  // namespace ips
