#include "behc/noisy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace behc {

namespace {

constexpr double kBcjrCertTol = 1e-8;
constexpr double kStationaryCertTol = 1e-12;
constexpr double kStationaryAcceptTol = 1e-13;
constexpr double kPairMassFloor = 1e-14;
constexpr double kPenaltyWeight = 1e4;
constexpr double kSearchFloor = 1e-6;  // search stays interior; see noisy_stationary pre

double attempt_of(const NoisyInstance& inst, const Policy& pol, int u, int q) {
  if (inst.forced_attempt(q)) return 1.0;
  return pol.attempt[static_cast<size_t>(q)][static_cast<size_t>(u)];
}

// Probability of choosing u_plus from (u, q) under pol.
double uplus_prob(const NoisyInstance& inst, const Policy& pol, int u, int q, int uplus) {
  const double a = attempt_of(inst, pol, u, q);
  if (inst.forced_attempt(q)) return uplus == 0 ? 1.0 : 0.0;
  return uplus == 0 ? a : 1.0 - a;
}

struct RateInternals {
  StationaryResult st;
  BcjrResult bcjr;
};

}  // namespace

std::vector<int> NoisyInstance::uplus_at(int u, int q) const {
  if (u_cap < 0) return aux.uplus_set(u, q);
  const int defer = std::min(u + 1, u_cap);
  return {0, defer};
}

NoisyInstance ladder_instance(double eta, const DMC& dmc, int num_nodes_minus_one) {
  if (!(dmc(0, 0) == 1.0 && dmc(1, 1) == 1.0))
    throw std::invalid_argument("ladder_instance: the ladder layout requires a noiseless channel");
  NoisyInstance inst;
  inst.param = make_harvest(eta);
  inst.dmc = dmc;
  inst.graph = build_graph(GraphKind::LowerBound, num_nodes_minus_one);
  inst.aux = make_aux_sets(GraphKind::LowerBound, num_nodes_minus_one);
  inst.u_cap = -1;
  return inst;
}

NoisyInstance capped_instance(double eta, const DMC& dmc, int num_nodes_minus_one, int u_cap) {
  if (u_cap < 1) throw std::invalid_argument("capped_instance: u_cap must be at least 1");
  NoisyInstance inst;
  inst.param = make_harvest(eta);
  inst.dmc = dmc;
  inst.graph = build_graph(GraphKind::LowerBound, num_nodes_minus_one);
  inst.aux = make_aux_sets(GraphKind::LowerBound, num_nodes_minus_one);
  inst.u_cap = u_cap;
  return inst;
}

Policy uniform_noisy_policy(const NoisyInstance& inst, double attempt_prob) {
  if (!(attempt_prob >= 0.0 && attempt_prob <= 1.0))
    throw std::invalid_argument("uniform_noisy_policy: attempt probability must lie in [0,1]");
  Policy pol;
  pol.kind = GraphKind::LowerBound;
  pol.last_node = inst.last_node();
  pol.attempt.resize(static_cast<size_t>(inst.last_node()) + 1);
  for (int q = 0; q <= inst.last_node(); ++q)
    pol.attempt[static_cast<size_t>(q)].assign(static_cast<size_t>(inst.u_max_at(q)) + 1,
                                               inst.forced_attempt(q) ? 1.0 : attempt_prob);
  return pol;
}

void check_noisy_policy(const NoisyInstance& inst, const Policy& pol) {
  if (static_cast<int>(pol.attempt.size()) != inst.last_node() + 1)
    throw std::invalid_argument("check_noisy_policy: one attempt row per node expected");
  for (int q = 0; q <= inst.last_node(); ++q) {
    const auto& rowv = pol.attempt[static_cast<size_t>(q)];
    if (static_cast<int>(rowv.size()) != inst.u_max_at(q) + 1)
      throw std::invalid_argument("check_noisy_policy: attempt row has the wrong width at node " +
                                  std::to_string(q));
    for (double a : rowv)
      if (!(a >= 0.0 && a <= 1.0))
        throw std::invalid_argument("check_noisy_policy: attempt probability outside [0,1]");
    if (inst.forced_attempt(q))
      for (double a : rowv)
        if (a != 1.0) throw std::invalid_argument("check_noisy_policy: the last node forces an attempt");
  }
}

NoisyStates::NoisyStates(const NoisyInstance& inst) {
  const int n = inst.last_node();
  offset_.resize(static_cast<size_t>(n) + 1, 0);
  for (int q = 0; q <= n; ++q) {
    offset_[static_cast<size_t>(q)] = count_;
    for (int u = 0; u <= inst.u_max_at(q); ++u)
      for (int s = 0; s <= 1; ++s) states_.push_back(State{s, u, q});
    count_ += 2 * (inst.u_max_at(q) + 1);
  }
}

int NoisyStates::id(int s, int u, int q) const {
  if (q < 0 || q >= static_cast<int>(offset_.size())) return -1;
  if (s < 0 || s > 1 || u < 0) return -1;
  const int base = offset_[static_cast<size_t>(q)] + 2 * u + s;
  if (base >= count_) return -1;
  const int next_off =
      q + 1 < static_cast<int>(offset_.size()) ? offset_[static_cast<size_t>(q) + 1] : count_;
  if (base >= next_off) return -1;
  return base;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> transition_matrix(const NoisyInstance& inst, const Policy& pol) {
  check_noisy_policy(inst, pol);
  const NoisyStates idx(inst);
  std::vector<Eigen::Triplet<double>> trips;
  for (int from = 0; from < idx.count(); ++from) {
    const auto& st = idx.states()[static_cast<size_t>(from)];
    for (int uplus : inst.uplus_at(st.u, st.q)) {
      const double pu = uplus_prob(inst, pol, st.u, st.q, uplus);
      if (pu == 0.0) continue;
      const int x = strategy_f(uplus, st.s);
      for (int y = 0; y <= 1; ++y) {
        const double py = inst.dmc(y, x);
        if (py == 0.0) continue;
        const int qn = inst.graph.next(st.q, y);
        for (int splus = 0; splus <= 1; ++splus) {
          const double pl = noiseless_law(inst.param, splus, x, st.s);
          if (pl == 0.0) continue;
          const int to = idx.id(splus, uplus, qn);
          if (to < 0)
            throw std::logic_error("transition_matrix: transition into a state outside the layout");
          trips.emplace_back(from, to, pu * py * pl);
        }
      }
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> t(idx.count(), idx.count());
  t.setFromTriplets(trips.begin(), trips.end());
  t.makeCompressed();
  return t;
}

StationaryResult noisy_stationary(const NoisyInstance& inst, const Policy& pol,
                                  const Eigen::VectorXd* warm_start) {
  const Eigen::SparseMatrix<double, Eigen::RowMajor> t = transition_matrix(inst, pol);
  const Eigen::SparseMatrix<double> tt = t.transpose();
  StationaryResult st = stationary_distribution(tt, 1e-14, 1000000, warm_start);
  if (!st.converged || st.residual > kStationaryAcceptTol) {
    std::string corners;
    for (int q = 0; q <= inst.last_node(); ++q) {
      if (inst.forced_attempt(q)) continue;
      for (int u = 0; u <= inst.u_max_at(q); ++u) {
        const double a = pol.attempt[static_cast<size_t>(q)][static_cast<size_t>(u)];
        if (a == 0.0 || a == 1.0)
          corners += (corners.empty() ? "" : ", ") + std::string("attempt(u=") + std::to_string(u) +
                     ",q=" + std::to_string(q) + ")=" + std::to_string(a);
      }
    }
    std::string msg = "noisy_stationary: chain has no computable fixed point (residual " +
                      std::to_string(st.residual) + "); the policy is outside the stationary family";
    if (!corners.empty()) msg += "; boundary policy entries: " + corners;
    throw std::runtime_error(msg);
  }
  return st;
}

BcjrResult bcjr_residual(const NoisyInstance& inst, const Policy& pol, const Eigen::VectorXd& pi) {
  check_noisy_policy(inst, pol);
  const NoisyStates idx(inst);
  if (pi.size() != idx.count()) throw std::invalid_argument("bcjr_residual: pi dimension mismatch");
  const int n = inst.last_node();
  BcjrResult out;
  out.residual = 0.0;

  // joint mass over (u+, s+) carried by each (q, y) pair, grouped by q+
  struct PairPosterior {
    int q = 0, y = 0;
    Eigen::MatrixXd post;  // (u_max_at(q+) + 1) x 2, normalized
  };
  std::vector<std::vector<PairPosterior>> incoming(static_cast<size_t>(n) + 1);

  for (int q = 0; q <= n; ++q)
    for (int y = 0; y <= 1; ++y) {
      const int qp = inst.graph.next(q, y);
      Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(inst.u_max_at(qp) + 1, 2);
      double mass = 0.0;
      for (int u = 0; u <= inst.u_max_at(q); ++u)
        for (int s = 0; s <= 1; ++s) {
          const double m = pi[idx.id(s, u, q)];
          if (m == 0.0) continue;
          for (int uplus : inst.uplus_at(u, q)) {
            const double pu = uplus_prob(inst, pol, u, q, uplus);
            if (pu == 0.0) continue;
            const int x = strategy_f(uplus, s);
            const double py = inst.dmc(y, x);
            if (py == 0.0) continue;
            for (int splus = 0; splus <= 1; ++splus) {
              const double pl = noiseless_law(inst.param, splus, x, s);
              if (pl == 0.0) continue;
              if (uplus > inst.u_max_at(qp))
                throw std::logic_error("bcjr_residual: positive mass on a u+ outside the layout");
              const double w = m * pu * py * pl;
              joint(uplus, splus) += w;
              mass += w;
            }
          }
        }
      if (mass <= kPairMassFloor) {
        ++out.excluded_pairs;
        out.notes.push_back("pair (q=" + std::to_string(q) + ", y=" + std::to_string(y) +
                            ") carries no mass; excluded from the spread");
        continue;
      }
      incoming[static_cast<size_t>(qp)].push_back(PairPosterior{q, y, joint / mass});
    }

  for (int qp = 0; qp <= n; ++qp) {
    const auto& pairs = incoming[static_cast<size_t>(qp)];
    if (pairs.size() < 2) continue;
    for (int uplus = 0; uplus <= inst.u_max_at(qp); ++uplus)
      for (int splus = 0; splus <= 1; ++splus) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& pp : pairs) {
          const double v = pp.post(uplus, splus);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        out.residual = std::max(out.residual, hi - lo);
      }
  }
  return out;
}

namespace {

RateReport rate_impl(const NoisyInstance& inst, const Policy& pol, Eigen::VectorXd* warm) {
  const StationaryResult st = noisy_stationary(inst, pol, warm);
  if (warm != nullptr) *warm = st.pi;
  const NoisyStates idx(inst);
  const int n = inst.last_node();
  RateReport rep;
  rep.stationary_residual = st.residual;

  double h_y_q = 0.0;       // H(Y | Q)
  double h_y_uuq = 0.0;     // H(Y | U+, U, Q)
  for (int q = 0; q <= n; ++q) {
    double pi_q = 0.0;
    double p_y1_q = 0.0;  // joint P(q, Y=1)
    for (int u = 0; u <= inst.u_max_at(q); ++u) {
      double pi_uq = 0.0;
      double p_s1 = 0.0;
      for (int s = 0; s <= 1; ++s) {
        const double m = st.pi[idx.id(s, u, q)];
        pi_uq += m;
        if (s == 1) p_s1 = m;
      }
      pi_q += pi_uq;
      if (pi_uq <= 0.0) continue;
      const double cond_s1 = p_s1 / pi_uq;
      for (int uplus : inst.uplus_at(u, q)) {
        const double pu = uplus_prob(inst, pol, u, q, uplus);
        if (pu == 0.0) continue;
        // P(y=1 | u+, u, q) mixes the two battery values
        const double p_y1 = (1.0 - cond_s1) * inst.dmc(1, strategy_f(uplus, 0)) +
                            cond_s1 * inst.dmc(1, strategy_f(uplus, 1));
        h_y_uuq += pi_uq * pu * binary_entropy(p_y1);
        p_y1_q += pi_uq * pu * p_y1;
      }
    }
    if (pi_q > 0.0) h_y_q += pi_q * binary_entropy(p_y1_q / pi_q);
  }
  rep.rate = h_y_q - h_y_uuq;

  const BcjrResult bc = bcjr_residual(inst, pol, st.pi);
  rep.bcjr = bc.residual;
  rep.excluded_pairs = bc.excluded_pairs;
  rep.notes = bc.notes;
  rep.certified = rep.bcjr <= kBcjrCertTol && rep.stationary_residual <= kStationaryCertTol;
  return rep;
}

// ---- policy search ----

struct FreeCoord {
  int q = 0, u = 0;
};

std::vector<FreeCoord> free_coords(const NoisyInstance& inst) {
  std::vector<FreeCoord> out;
  for (int q = 0; q <= inst.last_node(); ++q) {
    if (inst.forced_attempt(q)) continue;
    for (int u = 0; u <= inst.u_max_at(q); ++u) out.push_back(FreeCoord{q, u});
  }
  return out;
}

struct Candidate {
  double rate = -std::numeric_limits<double>::infinity();
  RateReport report;
  Policy policy;
  bool valid = false;
};

// (rate desc, residual asc) ordering used for both certified and fallback merges
bool better_candidate(const Candidate& a, const Candidate& b) {
  if (!b.valid) return a.valid;
  if (!a.valid) return false;
  if (a.rate != b.rate) return a.rate > b.rate;
  return a.report.bcjr < b.report.bcjr;
}

struct RestartOutcome {
  Candidate best_certified;
  Candidate best_any;
  long evaluations = 0;
};

class Evaluator {
 public:
  explicit Evaluator(const NoisyInstance& inst) : inst_(inst) {}

  // returns the penalized objective; tracks the best candidates seen
  double penalized(const Policy& pol, RestartOutcome& out) {
    ++out.evaluations;
    RateReport rep;
    try {
      rep = rate_impl(inst_, pol, &warm_);
    } catch (const std::exception&) {
      return -std::numeric_limits<double>::infinity();
    }
    Candidate cand{rep.rate, rep, pol, true};
    if (rep.certified && better_candidate(cand, out.best_certified)) out.best_certified = cand;
    if (better_candidate(cand, out.best_any)) out.best_any = cand;
    last_report_ = rep;
    return rep.rate - kPenaltyWeight * rep.bcjr * rep.bcjr;
  }

  // minimized during the repair pass
  double residual_sq(const Policy& pol, RestartOutcome& out) {
    const double pen = penalized(pol, out);
    if (!std::isfinite(pen)) return std::numeric_limits<double>::infinity();
    return last_report_.bcjr * last_report_.bcjr;
  }

 private:
  const NoisyInstance& inst_;
  Eigen::VectorXd warm_;
  RateReport last_report_;
};

// Golden-section extremum of f over [lo, hi]; returns the best sampled point.
template <class F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, int iters) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  double best_x = f1 >= f2 ? x1 : x2;
  double best_f = std::max(f1, f2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
      if (f2 > best_f) {
        best_f = f2;
        best_x = x2;
      }
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
      if (f1 > best_f) {
        best_f = f1;
        best_x = x1;
      }
    }
  }
  return {best_x, best_f};
}

RestartOutcome run_restart(const NoisyInstance& inst, int restart, unsigned long long seed) {
  const std::vector<FreeCoord> coords = free_coords(inst);
  RestartOutcome out;
  Evaluator eval(inst);

  Policy pol = uniform_noisy_policy(inst, 0.5);
  if (restart > 0) {
    std::mt19937_64 eng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<unsigned long long>(restart)));
    auto u01 = [&eng]() { return (eng() >> 11) * 0x1.0p-53; };
    for (const FreeCoord& c : coords)
      pol.attempt[static_cast<size_t>(c.q)][static_cast<size_t>(c.u)] = 0.05 + 0.9 * u01();
  }

  double cur = eval.penalized(pol, out);
  const int gs_iters = 26;

  // coordinate-wise ascent on the penalized rate
  for (int pass = 0; pass < 8; ++pass) {
    const double pass_start = cur;
    for (const FreeCoord& c : coords) {
      double& slot = pol.attempt[static_cast<size_t>(c.q)][static_cast<size_t>(c.u)];
      const double keep = slot;
      auto line = [&](double a) {
        slot = a;
        return eval.penalized(pol, out);
      };
      const auto [bx, bf] = golden_max(line, kSearchFloor, 1.0 - kSearchFloor, gs_iters);
      if (bf > cur) {
        slot = bx;
        cur = eval.penalized(pol, out);  // refresh the evaluator cache at the accepted point
      } else {
        slot = keep;
      }
    }
    if (!(cur > pass_start + 1e-9)) break;
  }

  // feasibility repair: walk the residual down if the ascent left it high
  RateReport rep;
  try {
    Eigen::VectorXd warm;
    rep = rate_impl(inst, pol, &warm);
  } catch (const std::exception&) {
    return out;
  }
  if (rep.bcjr > kBcjrCertTol) {
    double cur_r = rep.bcjr * rep.bcjr;
    for (int pass = 0; pass < 2; ++pass) {
      const double pass_start = cur_r;
      for (const FreeCoord& c : coords) {
        double& slot = pol.attempt[static_cast<size_t>(c.q)][static_cast<size_t>(c.u)];
        const double keep = slot;
        auto line = [&](double a) {
          slot = a;
          return -eval.residual_sq(pol, out);  // maximize the negative residual
        };
        const auto [bx, bf] = golden_max(line, kSearchFloor, 1.0 - kSearchFloor, gs_iters);
        if (-bf < cur_r) {
          slot = bx;
          cur_r = eval.residual_sq(pol, out);
        } else {
          slot = keep;
        }
      }
      if (!(cur_r < pass_start - 1e-18)) break;
    }
  }
  return out;
}

}  // namespace

RateReport rate(const NoisyInstance& inst, const Policy& pol) { return rate_impl(inst, pol, nullptr); }

SearchResult search_bsc(double eta, double p, int num_nodes_minus_one, int restarts,
                        unsigned long long seed, int threads) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("search_bsc: eta must lie in [0,1]");
  if (!(p >= 0.0 && p <= 0.5)) throw std::invalid_argument("search_bsc: p must lie in [0, 1/2]");
  if (num_nodes_minus_one < 1) throw std::invalid_argument("search_bsc: N must be at least 1");
  if (restarts < 1) throw std::invalid_argument("search_bsc: at least one restart required");

  const NoisyInstance inst = p == 0.0 ? ladder_instance(eta, make_bsc(0.0), num_nodes_minus_one)
                                      : capped_instance(eta, make_bsc(p), num_nodes_minus_one, 1);

  std::vector<RestartOutcome> outcomes(static_cast<size_t>(restarts));
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, restarts));
  if (workers == 1) {
    for (int r = 0; r < restarts; ++r) outcomes[static_cast<size_t>(r)] = run_restart(inst, r, seed);
  } else {
    std::atomic<int> cursor{0};
    auto work = [&]() {
      for (;;) {
        const int r = cursor.fetch_add(1);
        if (r >= restarts) return;
        outcomes[static_cast<size_t>(r)] = run_restart(inst, r, seed);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  SearchResult res;
  int best_cert_restart = -1, best_any_restart = -1;
  Candidate best_cert, best_any;
  for (int r = 0; r < restarts; ++r) {
    const RestartOutcome& o = outcomes[static_cast<size_t>(r)];
    if (better_candidate(o.best_certified, best_cert)) {
      best_cert = o.best_certified;
      best_cert_restart = r;
    }
    if (better_candidate(o.best_any, best_any)) {
      best_any = o.best_any;
      best_any_restart = r;
    }
  }
  res.best_rate_any = best_any.valid ? best_any.rate : 0.0;
  if (best_cert.valid) {
    res.report = best_cert.report;
    res.policy = best_cert.policy;
    res.certified_found = true;
    res.restart = best_cert_restart;
  } else if (best_any.valid) {
    res.report = best_any.report;
    res.policy = best_any.policy;
    res.certified_found = false;
    res.restart = best_any_restart;
    res.report.notes.push_back("no certified policy found; reporting the best uncertified rate");
  } else {
    throw std::runtime_error("search_bsc: no policy could be evaluated");
  }
  return res;
}

}  // namespace behc
