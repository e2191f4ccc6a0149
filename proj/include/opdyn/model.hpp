#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "opdyn/rng.hpp"

namespace opdyn {

enum class Boundary { ring, segment };

inline const char* to_string(Boundary b) { return b == Boundary::ring ? "ring" : "segment"; }

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "ring") return Boundary::ring;
  if (s == "segment") return Boundary::segment;
  throw std::invalid_argument("boundary must be 'ring' or 'segment', got '" + s + "'");
}

// Validated model parameters and the constants derived from them.
//
//   rho_minus = (1+2*mu_plus)/(1+3*mu_plus)  worst post/pre gap ratio for an
//                                            interaction next to a large gap
//   rho_plus  = 1+2*mu_plus                  gap multiplier of a repulsion
//   dominance_gap = mu_minus*theta/(1-rho_minus) = (3+1/mu_plus)*mu_minus*theta
//       gap level above which a single adjacent attraction cannot pull the
//       local maximum below rho_minus times the old gap
//   kick_count = ceil(log(2*dominance_gap/theta)/log(rho_plus)), clamped to
//       at least one: repulsions on one edge needed to push a gap from just
//       above theta past twice the dominance gap
//
// dominance_gap and kick_count are only defined for mu_plus > 0; with
// mu_plus = 0 the model reduces to the classic compromise-only dynamics and
// divergence_constants_defined is false.
struct ModelParams {
  double theta = 1.0;
  double mu_minus = 0.5;
  double mu_plus = 0.25;

  double rho_minus = 1.0;
  double rho_plus = 1.0;
  double dominance_gap = std::numeric_limits<double>::quiet_NaN();
  int kick_count = 0;
  bool divergence_constants_defined = false;

  bool classic() const { return mu_plus == 0.0; }

  static ModelParams validated(double theta, double mu_minus, double mu_plus) {
    if (!std::isfinite(theta) || !(theta > 0.0) || !(theta < 2.0))
      throw std::invalid_argument("theta must satisfy 0 < theta < 2, got " + std::to_string(theta));
    if (!std::isfinite(mu_minus) || !(mu_minus > 0.0) || !(mu_minus <= 0.5))
      throw std::invalid_argument("mu_minus must satisfy 0 < mu_minus <= 1/2, got " +
                                  std::to_string(mu_minus));
    if (!std::isfinite(mu_plus) || !(mu_plus >= 0.0) || !(mu_plus <= 0.5))
      throw std::invalid_argument("mu_plus must satisfy 0 <= mu_plus <= 1/2, got " +
                                  std::to_string(mu_plus));
    ModelParams p;
    p.theta = theta;
    p.mu_minus = mu_minus;
    p.mu_plus = mu_plus;
    p.rho_minus = (1.0 + 2.0 * mu_plus) / (1.0 + 3.0 * mu_plus);
    p.rho_plus = 1.0 + 2.0 * mu_plus;
    if (mu_plus > 0.0) {
      p.dominance_gap = (3.0 + 1.0 / mu_plus) * mu_minus * theta;
      const double raw = std::log(2.0 * p.dominance_gap / theta) / std::log(p.rho_plus);
      p.kick_count = std::max(1, static_cast<int>(std::ceil(raw - 1e-12)));
      p.divergence_constants_defined = true;
    }
    return p;
  }
};

enum class Branch { attraction, repulsion };

struct InteractionOutcome {
  double new_left;
  double new_right;
  Branch branch;
};

// Pairwise update: opinions within theta of each other compromise by
// mu_minus, opinions farther apart than theta repel by mu_plus. Equal
// distance theta compromises. Both branches conserve the pair sum.
inline InteractionOutcome interact(double a, double b, const ModelParams& p) {
  const double d = b - a;
  if (std::abs(d) <= p.theta) {
    const double t = p.mu_minus * d;
    return {a + t, b - t, Branch::attraction};
  }
  const double t = p.mu_plus * d;
  return {a - t, b + t, Branch::repulsion};
}

// Opinion values on the sites of a finite ring or segment, with edge-gap
// accessors. Edge e joins sites e and e+1 (mod N on the ring).
class OpinionLattice {
 public:
  OpinionLattice(std::vector<double> opinions, Boundary boundary)
      : opinions_(std::move(opinions)), boundary_(boundary) {
    if (opinions_.size() < 4) throw std::invalid_argument("lattice needs at least 4 sites");
  }

  // i.i.d. uniform [-1,1] opinions; deterministic for a given generator state.
  static OpinionLattice random_uniform(int n_sites, Boundary boundary, Rng& rng) {
    if (n_sites < 4) throw std::invalid_argument("lattice needs at least 4 sites");
    std::vector<double> v(static_cast<std::size_t>(n_sites));
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return OpinionLattice(std::move(v), boundary);
  }

  int sites() const { return static_cast<int>(opinions_.size()); }
  int edge_count() const { return boundary_ == Boundary::ring ? sites() : sites() - 1; }
  Boundary boundary() const { return boundary_; }

  int left_site(int edge) const { return edge; }
  int right_site(int edge) const {
    const int r = edge + 1;
    return (boundary_ == Boundary::ring && r == sites()) ? 0 : r;
  }

  double opinion(int site) const { return opinions_[static_cast<std::size_t>(site)]; }
  const std::vector<double>& opinions() const { return opinions_; }

  double gap(int edge) const {
    check_edge(edge);
    return std::abs(opinions_[static_cast<std::size_t>(right_site(edge))] -
                    opinions_[static_cast<std::size_t>(left_site(edge))]);
  }

  // Edge at signed offset from e; -1 when it falls off a segment end.
  int neighbor_edge(int edge, int offset) const {
    int e = edge + offset;
    if (boundary_ == Boundary::ring) {
      const int m = edge_count();
      e %= m;
      if (e < 0) e += m;
      return e;
    }
    return (e >= 0 && e < edge_count()) ? e : -1;
  }

  InteractionOutcome interact_on(int edge, const ModelParams& p) const {
    check_edge(edge);
    return interact(opinions_[static_cast<std::size_t>(left_site(edge))],
                    opinions_[static_cast<std::size_t>(right_site(edge))], p);
  }

  void apply(int edge, const InteractionOutcome& o) {
    check_edge(edge);
    opinions_[static_cast<std::size_t>(left_site(edge))] = o.new_left;
    opinions_[static_cast<std::size_t>(right_site(edge))] = o.new_right;
  }

  void set_opinion(int site, double v) { opinions_.at(static_cast<std::size_t>(site)) = v; }

  double opinion_sum() const {
    double s = 0.0;
    for (double x : opinions_) s += x;
    return s;
  }

  double abs_opinion_sum() const {
    double s = 0.0;
    for (double x : opinions_) s += std::abs(x);
    return s;
  }

  bool finite() const {
    for (double x : opinions_)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  void check_edge(int edge) const {
    if (edge < 0 || edge >= edge_count())
      throw std::out_of_range("edge index " + std::to_string(edge) + " out of range [0," +
                              std::to_string(edge_count()) + ")");
  }

  std::vector<double> opinions_;
  Boundary boundary_;
};

}  // namespace opdyn
