#include "behc/oracle.hpp"

#include "behc/model.hpp"
#include "behc/qgraph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace behc {

GridResult grid_search_lb(double eta, int num_nodes_minus_one, double resolution) {
  const int n = num_nodes_minus_one;
  if (n < 0 || n > 2)
    throw std::invalid_argument("grid_search_lb: exhaustive grids are only feasible for N <= 2");
  if (!(resolution > 0.0 && resolution <= 1.0))
    throw std::invalid_argument("grid_search_lb: resolution must lie in (0,1]");
  const HarvestParam param = make_harvest(eta);
  const ConvexProgram prog = build_program(GraphKind::LowerBound, n, param);

  const int k = static_cast<int>(std::llround(1.0 / resolution));
  std::vector<std::pair<int, int>> free_entries;  // (q, u) below the forced last node
  for (int q = 0; q < n; ++q)
    for (int u = 0; u <= q; ++u) free_entries.emplace_back(q, u);

  Policy pol = uniform_policy(GraphKind::LowerBound, n, 1.0);
  GridResult out;
  out.best_value = -std::numeric_limits<double>::infinity();
  out.resolution = resolution;

  std::vector<int> idx(free_entries.size(), 0);
  for (;;) {
    for (size_t j = 0; j < free_entries.size(); ++j)
      pol.attempt[static_cast<size_t>(free_entries[j].first)]
                 [static_cast<size_t>(free_entries[j].second)] =
          static_cast<double>(idx[j]) / static_cast<double>(k);
    ++out.evaluations;
    try {
      const Eigen::VectorXd v = policy_to_joint(prog, pol);
      const double val = objective(prog, v).value;
      if (val > out.best_value) {
        out.best_value = val;
        out.best_policy = pol;
      }
    } catch (const std::exception&) {
      ++out.skipped;
    }
    size_t j = 0;
    while (j < idx.size() && ++idx[j] > k) {
      idx[j] = 0;
      ++j;
    }
    if (j == idx.size()) break;
  }
  return out;
}

long SimResult::visits(int u, int q) const {
  const auto& cell = counts.at(static_cast<size_t>(q)).at(static_cast<size_t>(u));
  return cell[0] + cell[1];
}

double SimResult::empirical_pi0(int u, int q) const {
  const long vis = visits(u, q);
  if (vis == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(counts[static_cast<size_t>(q)][static_cast<size_t>(u)][0]) /
         static_cast<double>(vis);
}

namespace {

using Counts = std::vector<std::vector<std::array<long, 2>>>;

Counts zero_counts(const AuxSets& aux, int n) {
  Counts c(static_cast<size_t>(n) + 1);
  for (int q = 0; q <= n; ++q)
    c[static_cast<size_t>(q)].assign(static_cast<size_t>(aux.u_max(q)) + 1, {0, 0});
  return c;
}

void run_shard(GraphKind kind, double eta, const Policy& pol, const QGraph& graph, long burn_in,
               long steps, unsigned long long seed, Counts& counts) {
  const int n = pol.last_node;
  std::mt19937_64 eng(seed);
  auto u01 = [&eng]() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };

  int s = 1, u = 0, q = 0;
  auto evolve = [&]() {
    const double a = pol.attempt[static_cast<size_t>(q)][static_cast<size_t>(u)];
    const int uplus = u01() < a ? 0 : (q == n ? 1 : u + 1);  // defer at the last node re-labels to 1
    const int x = strategy_f(uplus, s);
    const int e = u01() < eta ? 1 : 0;
    const int s_next = (kind == GraphKind::UpperBound && x == 0 && q >= n - 1)
                           ? 1
                           : state_evolution(s, x, e);
    q = graph.next(q, x);
    u = uplus;
    s = s_next;
  };

  for (long i = 0; i < burn_in; ++i) evolve();
  for (long i = 0; i < steps; ++i) {
    ++counts[static_cast<size_t>(q)][static_cast<size_t>(u)][static_cast<size_t>(s)];
    evolve();
  }
}

}  // namespace

SimResult simulate_chain(GraphKind kind, double eta, const Policy& pol, const SimConfig& cfg) {
  check_policy(pol);
  if (pol.kind != kind)
    throw std::invalid_argument("simulate_chain: policy was built for the other graph kind");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("simulate_chain: eta must lie in [0,1]");
  if (kind == GraphKind::UpperBound && pol.last_node == 0)
    throw std::invalid_argument("simulate_chain: the single-node upper-bound layout is degenerate");
  if (cfg.burn_in < 0 || cfg.shards < 1 || cfg.steps <= cfg.burn_in)
    throw std::invalid_argument("simulate_chain: steps must exceed the burn-in");

  const int n = pol.last_node;
  const QGraph graph = build_graph(kind, n);
  const AuxSets aux = make_aux_sets(kind, n);

  const int shards = cfg.shards;
  std::vector<Counts> partial(static_cast<size_t>(shards));
  std::vector<long> shard_steps(static_cast<size_t>(shards), cfg.steps / shards);
  for (long r = 0; r < cfg.steps % shards; ++r) ++shard_steps[static_cast<size_t>(r)];

  auto shard_seed = [&cfg](int i) {
    return cfg.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<unsigned long long>(i + 1));
  };

  int workers = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, shards));
  if (workers == 1) {
    for (int i = 0; i < shards; ++i) {
      partial[static_cast<size_t>(i)] = zero_counts(aux, n);
      run_shard(kind, eta, pol, graph, cfg.burn_in, shard_steps[static_cast<size_t>(i)],
                shard_seed(i), partial[static_cast<size_t>(i)]);
    }
  } else {
    std::atomic<int> cursor{0};
    auto work = [&]() {
      for (;;) {
        const int i = cursor.fetch_add(1);
        if (i >= shards) return;
        partial[static_cast<size_t>(i)] = zero_counts(aux, n);
        run_shard(kind, eta, pol, graph, cfg.burn_in, shard_steps[static_cast<size_t>(i)],
                  shard_seed(i), partial[static_cast<size_t>(i)]);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  SimResult res;
  res.kind = kind;
  res.last_node = n;
  res.counts = zero_counts(aux, n);
  for (const Counts& c : partial)
    for (size_t q = 0; q < c.size(); ++q)
      for (size_t uu = 0; uu < c[q].size(); ++uu)
        for (int s = 0; s <= 1; ++s) res.counts[q][uu][static_cast<size_t>(s)] += c[q][uu][static_cast<size_t>(s)];
  res.total = cfg.steps;
  return res;
}

Eigen::VectorXd finite_diff_gradient(const ConvexProgram& prog, const Eigen::VectorXd& v, double h) {
  if (v.size() != prog.num_vars())
    throw std::invalid_argument("finite_diff_gradient: dimension mismatch");
  h = std::clamp(h, 1e-8, 1e-5);
  if (!(v.minCoeff() > h))
    throw std::invalid_argument("finite_diff_gradient: probe points must stay strictly positive");
  Eigen::VectorXd g(v.size());
  Eigen::VectorXd w = v;
  for (Eigen::Index t = 0; t < v.size(); ++t) {
    w[t] = v[t] + h;
    const double fp = objective(prog, w).value;
    w[t] = v[t] - h;
    const double fm = objective(prog, w).value;
    w[t] = v[t];
    g[t] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace behc
