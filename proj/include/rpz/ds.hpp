#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rpz/distribution.hpp"
#include "rpz/eval.hpp"
#include "rpz/rng.hpp"
#include "rpz/value.hpp"

namespace rpz {

struct Op;

namespace ds {

enum class Status { Initialized, Marginalized, Realized };
const char* status_name(Status s);

// X | Y ~ N(a Y + b, v)
struct GaussianOfAffine {
  double a = 1.0, b = 0.0, v = 1.0;
};
// X | Y ~ N(A Y + b, S)
struct MvGaussianOfAffine {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd S;
};
// X | Y ~ Bernoulli(Y)
struct BernoulliOfBeta {};

using Cond = std::variant<std::monostate, GaussianOfAffine, MvGaussianOfAffine, BernoulliOfBeta>;

class Graph;
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Node(long id, std::shared_ptr<std::atomic<long>> live);
  ~Node();
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  long id;
  Status status = Status::Marginalized;
  Cond cond;            // relation to the parent while it is not realized
  NodePtr parent;       // streaming: kept only while Initialized
  NodePtr mchild;       // the marginalized child, if any
  std::vector<Node*> children;  // naive variant only
  DistPtr marginal;     // Marginalized
  Value value;          // Realized
  // One-dimensional multivariate node whose values are scalars.
  bool scalar_view = false;
  // Value family: 'g' scalar Gaussian, 'm' multivariate Gaussian, 'v' scalar
  // view of a multivariate node, 'b' Beta, 'o' anything else.
  char family = 'o';
  std::shared_ptr<std::atomic<long>> live;
};

}  // namespace ds

// Symbolic term over delayed-sampling nodes. Tuples of symbolic values are
// ordinary tuple values with symbolic leaves.
struct SymExpr {
  enum class Tag { Const, RVar, Affine, AffineVec, App };
  Tag tag = Tag::Const;
  Value c;                 // Const
  ds::NodePtr node;        // RVar
  double a = 1.0, b = 0.0;  // Affine: a * e + b
  Eigen::MatrixXd A;       // AffineVec: A * e + bv
  Eigen::VectorXd bv;
  bool scalar_out = false;  // AffineVec with one row producing a float
  SymPtr e;                // Affine, AffineVec operand
  const Op* op = nullptr;  // App
  Value arg;               // App operand (may contain symbolic leaves)
};

std::string describe(const SymExpr& s);

SymPtr sym_rvar(ds::NodePtr n);
SymPtr sym_affine(double a, SymPtr e, double b);
SymPtr sym_affine_vec(Eigen::MatrixXd A, SymPtr e, Eigen::VectorXd b, bool scalar_out);
SymPtr sym_app(const Op* op, Value arg);

namespace ds {

// Per-particle delayed-sampling graph.
class Graph {
 public:
  Graph(bool streaming, std::shared_ptr<std::atomic<long>> live);
  ~Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool streaming() const { return streaming_; }
  const std::shared_ptr<std::atomic<long>>& live() const { return live_; }
  long next_id() const { return next_id_; }

  // New root node with a known marginal.
  NodePtr add_root(DistPtr marginal);
  // New Initialized child of a non-realized parent.
  NodePtr initialize(Cond cond, const NodePtr& parent, bool scalar_view = false);

  // Adds X ~ mu, recognizing conjugate relations; returns the node.
  NodePtr assume(const Value& mu, Rng& rng);
  void marginalize(const NodePtr& n, Rng& rng);
  void realize(const NodePtr& n, Value v);
  // Updates a marginalized node whose marginalized child has been realized.
  void condition(const NodePtr& parent);
  // Draws and realizes a node, sampling its marginalized descendants first.
  Value sample_node(const NodePtr& n, Rng& rng);
  // Log-density of v under the marginal of X ~ mu; realizes X at v.
  double observe(const Value& mu, const Value& v, Rng& rng);

  // Concrete value of a symbolic value; realizes every referenced node.
  Value value(const Value& v, Rng& rng);
  // Distribution of a value without modifying the graph. Returns null when
  // no closed form exists.
  DistPtr distribution_of(const Value& v) const;

  // Copy of the graph reachable from `state`, with `state` rewritten to
  // reference the copies.
  std::unique_ptr<Graph> deep_copy(const Value& state, Value& state_out) const;

  // Stable text form of the nodes reachable from `roots`.
  std::string serialize(const Value& roots) const;

  std::size_t registry_size() const { return registry_.size(); }

 private:
  bool streaming_;
  std::shared_ptr<std::atomic<long>> live_;
  long next_id_ = 0;
  std::vector<NodePtr> registry_;  // naive variant: every node ever created

  NodePtr make_node();
  void force_condition(const NodePtr& n);
  DistPtr node_distribution(const Node& n) const;
};

// Closed-form rules of the conjugacy registry.
DistPtr cond_marginal(const Cond& c, const Distribution& parent);
DistPtr cond_posterior(const Cond& c, const Distribution& parent, const Value& child_value);
DistPtr cond_given(const Cond& c, const Value& parent_value, bool scalar_view);

}  // namespace ds

// Effect handler that evaluates models over a delayed-sampling graph.
class DsEffects : public Effects {
 public:
  DsEffects(EngineConfig cfg, ds::Graph& g, Rng& rng) : Effects(std::move(cfg)), g_(g), rng_(rng) {}

  Value sample(const Value& dist) override;
  void observe(const Value& dist, const Value& v) override;
  void factor(const Value& w) override;
  Value apply(const Op& op, const Value& arg) override;
  bool truth(const Value& c) override;
  Value copy_state(const Value& s) override;

  double log_weight = 0.0;

 private:
  ds::Graph& g_;
  Rng& rng_;
};

}  // namespace rpz
