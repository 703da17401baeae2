#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "bsv/design.hpp"
#include "bsv/observables.hpp"

namespace bsv {

// Thrown when a graph falls outside the self-inverse case this library
// converts; the caller reports it rather than transforming the graph.
struct UnsupportedGraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GraphMode {
  Band field;
  int bin;  // index into the originating BinSet
};

// Adjacency of the pairing graph over frequency-bin modes, in BinSet order.
// Edges only connect idler bins to signal bins, so same-field blocks are zero.
struct GraphAdjacency {
  std::vector<GraphMode> modes;
  Eigen::MatrixXd g;  // symmetric, largest row norm scaled to 1
  double scale = 1;   // raw sampled weight divided out by the row normalization
  // |Im| left in the weights after separable per-mode phases are removed,
  // relative to the largest weight; ~0 for real designs, large when the
  // sampled phases are not attachable to individual modes.
  double phase_residual = 0;
  bool off_lattice = false;    // some bin center missed the frequency grid nodes
  std::vector<int> dim_modes;  // bins the design leaves essentially dark
};

// Sample pump * phase-matching at every idler-bin x signal-bin center pair and
// assemble the symmetric bipartite adjacency. Per-mode phases are factored out
// through a rank-1 fit of the squared phases, so designs that are real up to
// mode phases come out as signed real weights.
GraphAdjacency hgraph_from_design(const PumpSpectrum& pump, const Eigen::MatrixXcd& phi,
                                  const BinSet& bins);

// Quantize a sampled adjacency onto the nearest equal-magnitude signed
// pattern: entries below threshold * max|g| drop to zero, the rest become
// sign / sqrt(row count), restoring exact unit row norms before the
// self-inverse test.
GraphAdjacency snap_adjacency(const GraphAdjacency& g, double threshold = 0.2);

// Connected components of the mode graph, each restricted to its own modes,
// in order of first appearance.
std::vector<GraphAdjacency> partition_lattices(const GraphAdjacency& g);

// V = G when G is its own inverse (max |G*G - I| < 1e-6); the general
// conversion is out of scope and reported via UnsupportedGraphError.
Eigen::MatrixXd cluster_matrix(const GraphAdjacency& g);

struct NullifierSet {
  Eigen::VectorXd phi;            // sweep samples over [0, pi)
  Eigen::MatrixXd variances;      // n_phi x n_modes
  Eigen::VectorXd reference;      // vacuum level per nullifier: 1 + sum_k V_jk^2
  Eigen::VectorXd min_variance;   // per nullifier over the sweep
  Eigen::VectorXd argmin_phi;
  Eigen::VectorXd squeezing_db;   // 10 log10(min variance / reference)
  int simultaneous_index = -1;    // sweep index minimizing max_j var_j / ref_j
  double simultaneous_phi = 0;
  Eigen::VectorXd variances_at_simultaneous;
};

// Variance of every nullifier row p_j(phi) - sum_k V_jk q_k(phi) against the
// covariance matrix, swept over quadrature phase. V must index the same modes
// as the covariance's BinSet, in the same order.
NullifierSet nullifier_variances(const CovarianceMatrix& cov, const Eigen::MatrixXd& v,
                                 int n_phi = 721);

}  // namespace bsv
