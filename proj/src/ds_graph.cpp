#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "rpz/ds.hpp"
#include "rpz/error.hpp"
#include "rpz/ops.hpp"

namespace rpz {

namespace ds {

const char* status_name(Status s) {
  switch (s) {
    case Status::Initialized: return "initialized";
    case Status::Marginalized: return "marginalized";
    case Status::Realized: return "realized";
  }
  return "?";
}

Node::Node(long id_, std::shared_ptr<std::atomic<long>> live_) : id(id_), live(std::move(live_)) {
  if (live) live->fetch_add(1, std::memory_order_relaxed);
}

Node::~Node() {
  if (live) live->fetch_sub(1, std::memory_order_relaxed);
}

namespace {

[[noreturn]] void fail(const std::string& m) { throw Error(ErrorKind::Eval, "delayed sampling: " + m); }

Eigen::VectorXd as_vec(const Value& v) {
  if (v.is_vector()) return v.as_vector();
  return Eigen::VectorXd::Constant(1, v.as_float());
}

char family_of(const Distribution& d) {
  if (d.get<Distribution::Gaussian>()) return 'g';
  if (d.get<Distribution::MvGaussian>()) return 'm';
  if (d.get<Distribution::Beta>()) return 'b';
  return 'o';
}

// A one-dimensional multivariate marginal seen as a scalar Gaussian.
DistPtr view(const Node& n, DistPtr d) {
  if (!n.scalar_view || !d) return d;
  if (auto g = d->get<Distribution::MvGaussian>()) return make_gaussian(g->mean[0], g->cov(0, 0));
  return d;
}

}  // namespace

DistPtr cond_marginal(const Cond& c, const Distribution& parent) {
  if (auto g = std::get_if<GaussianOfAffine>(&c)) {
    auto p = parent.get<Distribution::Gaussian>();
    if (!p) fail("affine Gaussian child of a non-Gaussian parent");
    return make_gaussian(g->a * p->mean + g->b, g->a * g->a * p->var + g->v);
  }
  if (auto g = std::get_if<MvGaussianOfAffine>(&c)) {
    auto p = parent.get<Distribution::MvGaussian>();
    if (!p) fail("affine multivariate child of a non-multivariate parent");
    Eigen::MatrixXd cov = g->A * p->cov * g->A.transpose() + g->S;
    return make_mv_gaussian(g->A * p->mean + g->b, 0.5 * (cov + cov.transpose()));
  }
  if (std::holds_alternative<BernoulliOfBeta>(c)) {
    auto p = parent.get<Distribution::Beta>();
    if (!p) fail("Bernoulli child of a non-Beta parent");
    return make_bernoulli(p->a / (p->a + p->b));
  }
  fail("node without a conditional relation");
}

DistPtr cond_posterior(const Cond& c, const Distribution& parent, const Value& y) {
  if (auto g = std::get_if<GaussianOfAffine>(&c)) {
    auto p = parent.get<Distribution::Gaussian>();
    if (!p) fail("affine Gaussian child of a non-Gaussian parent");
    double s = g->a * g->a * p->var + g->v;
    double k = p->var * g->a / s;
    double mean = p->mean + k * (y.as_float() - (g->a * p->mean + g->b));
    // Equal to (1 - k a) var without the cancellation.
    double var = p->var * g->v / s;
    return make_gaussian(mean, var);
  }
  if (auto g = std::get_if<MvGaussianOfAffine>(&c)) {
    auto p = parent.get<Distribution::MvGaussian>();
    if (!p) fail("affine multivariate child of a non-multivariate parent");
    Eigen::MatrixXd s = g->A * p->cov * g->A.transpose() + g->S;
    Eigen::MatrixXd pat = p->cov * g->A.transpose();
    Eigen::MatrixXd k = s.ldlt().solve(pat.transpose()).transpose();
    Eigen::VectorXd mean = p->mean + k * (as_vec(y) - g->A * p->mean - g->b);
    Eigen::MatrixXd cov = p->cov - k * g->A * p->cov;
    return make_mv_gaussian(std::move(mean), 0.5 * (cov + cov.transpose()));
  }
  if (std::holds_alternative<BernoulliOfBeta>(c)) {
    auto p = parent.get<Distribution::Beta>();
    if (!p) fail("Bernoulli child of a non-Beta parent");
    return y.as_bool() ? make_beta(p->a + 1.0, p->b) : make_beta(p->a, p->b + 1.0);
  }
  fail("node without a conditional relation");
}

DistPtr cond_given(const Cond& c, const Value& x, bool) {
  if (auto g = std::get_if<GaussianOfAffine>(&c)) return make_gaussian(g->a * x.as_float() + g->b, g->v);
  if (auto g = std::get_if<MvGaussianOfAffine>(&c)) return make_mv_gaussian(g->A * as_vec(x) + g->b, g->S);
  if (std::holds_alternative<BernoulliOfBeta>(c)) return make_bernoulli(x.as_float());
  fail("node without a conditional relation");
}

Graph::Graph(bool streaming, std::shared_ptr<std::atomic<long>> live) : streaming_(streaming), live_(std::move(live)) {}

Graph::~Graph() {
  // The naive variant links parents and marginalized children both ways.
  for (auto& n : registry_) {
    n->parent.reset();
    n->mchild.reset();
  }
}

NodePtr Graph::make_node() {
  auto n = std::make_shared<Node>(next_id_++, live_);
  if (!streaming_) registry_.push_back(n);
  return n;
}

NodePtr Graph::add_root(DistPtr marginal) {
  NodePtr n = make_node();
  n->status = Status::Marginalized;
  n->family = family_of(*marginal);
  n->marginal = std::move(marginal);
  return n;
}

NodePtr Graph::initialize(Cond cond, const NodePtr& parent, bool scalar_view) {
  if (parent->status == Status::Realized) fail("initialize under a realized parent");
  NodePtr n = make_node();
  n->status = Status::Initialized;
  n->scalar_view = scalar_view;
  if (std::holds_alternative<GaussianOfAffine>(cond)) n->family = 'g';
  else if (std::holds_alternative<MvGaussianOfAffine>(cond)) n->family = scalar_view ? 'v' : 'm';
  n->cond = std::move(cond);
  n->parent = parent;
  if (!streaming_) parent->children.push_back(n.get());
  return n;
}

void Graph::condition(const NodePtr& p) {
  NodePtr c = p->mchild;
  if (!c || c->status != Status::Realized) fail("condition without a realized child");
  p->marginal = cond_posterior(c->cond, *p->marginal, c->value);
  p->mchild.reset();
  if (!streaming_) {
    auto& ch = p->children;
    ch.erase(std::remove(ch.begin(), ch.end(), c.get()), ch.end());
    c->parent.reset();
  }
}

void Graph::force_condition(const NodePtr& n) {
  if (n->status == Status::Marginalized && n->mchild && n->mchild->status == Status::Realized) condition(n);
}

void Graph::marginalize(const NodePtr& n, Rng& rng) {
  if (n->status != Status::Initialized) return;
  // Unrealized ancestors are marginalized from the top of the chain down.
  std::vector<NodePtr> chain{n};
  while (chain.back()->parent && chain.back()->parent->status == Status::Initialized) chain.push_back(chain.back()->parent);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const NodePtr& x = *it;
    NodePtr p = x->parent;
    if (!p) fail("initialized node without a parent");
    if (p->status == Status::Realized) {
      x->marginal = cond_given(x->cond, p->value, x->scalar_view);
      if (!streaming_) {
        auto& ch = p->children;
        ch.erase(std::remove(ch.begin(), ch.end(), x.get()), ch.end());
      }
      x->parent.reset();
      x->cond = std::monostate{};
    } else {
      force_condition(p);
      // At most one marginalized child: the previous one is sampled first.
      if (p->mchild) {
        NodePtr prev = p->mchild;
        sample_node(prev, rng);
        force_condition(p);
      }
      if (p->status == Status::Realized) {
        x->marginal = cond_given(x->cond, p->value, x->scalar_view);
        x->parent.reset();
        x->cond = std::monostate{};
      } else {
        x->marginal = cond_marginal(x->cond, *p->marginal);
        p->mchild = x;
        // Streaming: the backward pointer is dropped once marginalized.
        if (streaming_) x->parent.reset();
      }
    }
    x->status = Status::Marginalized;
  }
}

void Graph::realize(const NodePtr& n, Value v) {
  if (n->status == Status::Initialized) fail("realize on an initialized node");
  n->status = Status::Realized;
  n->value = std::move(v);
  n->marginal.reset();
  n->mchild.reset();
  if (streaming_) return;
  // Naive variant: condition the parent and fold the children eagerly.
  if (NodePtr p = n->parent) {
    if (p->status == Status::Marginalized && p->mchild == n) condition(p);
    n->parent.reset();
  }
  for (Node* c : n->children) {
    if (c->status != Status::Initialized) continue;
    c->marginal = cond_given(c->cond, n->value, c->scalar_view);
    c->status = Status::Marginalized;
    c->parent.reset();
  }
  n->children.clear();
}

Value Graph::sample_node(const NodePtr& ref, Rng& rng) {
  // Realizing the path may reset the pointer `ref` aliases.
  NodePtr n = ref;
  if (n->status == Status::Realized) return n->value;
  marginalize(n, rng);
  // Sample the marginalized descendants from the tail of the M-path back.
  std::vector<NodePtr> path{n};
  for (;;) {
    force_condition(path.back());
    NodePtr c = path.back()->mchild;
    if (!c) break;
    path.push_back(c);
  }
  for (std::size_t i = path.size(); i-- > 0;) {
    const NodePtr& x = path[i];
    Value v = draw(*view(*x, x->marginal), rng);
    realize(x, v);
    if (i > 0) force_condition(path[i - 1]);
  }
  return n->value;
}

namespace {

struct ScalarMatch {
  NodePtr node;
  double a = 1.0, b = 0.0;
};

struct VecMatch {
  NodePtr node;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  bool scalar_out = false;
};

bool match_scalar(const Value& m, ScalarMatch& out) {
  if (!m.is_sym()) return false;
  const SymExpr& s = *m.as_sym();
  if (s.tag == SymExpr::Tag::RVar && s.node->family == 'g') {
    out = {s.node, 1.0, 0.0};
    return true;
  }
  if (s.tag == SymExpr::Tag::Affine && s.e->tag == SymExpr::Tag::RVar && s.e->node->family == 'g') {
    out = {s.e->node, s.a, s.b};
    return true;
  }
  return false;
}

long node_dim(const Node& n) {
  if (n.status == Status::Realized && n.value.is_vector()) return n.value.as_vector().size();
  if (n.marginal)
    if (auto g = n.marginal->get<Distribution::MvGaussian>()) return g->mean.size();
  if (auto c = std::get_if<MvGaussianOfAffine>(&n.cond)) return c->A.rows();
  return -1;
}

bool match_vec(const Value& m, VecMatch& out) {
  if (!m.is_sym()) return false;
  const SymExpr& s = *m.as_sym();
  if (s.tag == SymExpr::Tag::RVar && s.node->family == 'm') {
    long d = node_dim(*s.node);
    if (d < 0) return false;
    out = {s.node, Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d), false};
    return true;
  }
  if (s.tag == SymExpr::Tag::AffineVec && s.e->tag == SymExpr::Tag::RVar && s.e->node->family == 'm') {
    out = {s.e->node, s.A, s.bv, s.scalar_out};
    return true;
  }
  return false;
}

}  // namespace

NodePtr Graph::assume(const Value& mu, Rng& rng) {
  if (mu.is_dist()) return add_root(mu.as_dist());
  if (!mu.is_sym() || mu.as_sym()->tag != SymExpr::Tag::App || !mu.as_sym()->op)
    fail("sample or observe of a non-distribution " + to_string(mu));
  const SymExpr& s = *mu.as_sym();
  const std::string& name = s.op->name;
  const Value& arg = s.arg;
  if (name == "gaussian") {
    Value var = value(arg.at(1), rng);
    ScalarMatch sm;
    VecMatch vm;
    if (match_scalar(arg.at(0), sm) && sm.node->status != Status::Realized)
      return initialize(GaussianOfAffine{sm.a, sm.b, var.as_float()}, sm.node);
    if (match_vec(arg.at(0), vm) && vm.scalar_out && vm.node->status != Status::Realized)
      return initialize(MvGaussianOfAffine{vm.A, vm.b, Eigen::MatrixXd::Constant(1, 1, var.as_float())}, vm.node, true);
    return add_root(apply_op(*s.op, Value::pair(value(arg.at(0), rng), var)).as_dist());
  }
  if (name == "mv_gaussian") {
    Value cov = value(arg.at(1), rng);
    VecMatch vm;
    if (match_vec(arg.at(0), vm) && !vm.scalar_out && vm.node->status != Status::Realized)
      return initialize(MvGaussianOfAffine{vm.A, vm.b, cov.as_matrix()}, vm.node);
    return add_root(apply_op(*s.op, Value::pair(value(arg.at(0), rng), cov)).as_dist());
  }
  if (name == "bernoulli") {
    if (arg.is_sym() && arg.as_sym()->tag == SymExpr::Tag::RVar) {
      const NodePtr& y = arg.as_sym()->node;
      if (y->family == 'b' && y->status != Status::Realized) return initialize(BernoulliOfBeta{}, y);
    }
  }
  // Dependencies are broken by realizing every referenced node.
  Value d = value(mu, rng);
  if (!d.is_dist()) fail("distribution expected, got " + to_string(d));
  return add_root(d.as_dist());
}

double Graph::observe(const Value& mu, const Value& v, Rng& rng) {
  if (mu.is_dist()) {
    const Distribution& d = *mu.as_dist();
    if (!has_density(d)) throw Error(ErrorKind::Density, "observe on a distribution without density: " + describe(d));
    return log_pdf(d, v);
  }
  NodePtr x = assume(mu, rng);
  marginalize(x, rng);
  DistPtr m = view(*x, x->marginal);
  if (!has_density(*m)) throw Error(ErrorKind::Density, "observe on a distribution without density: " + describe(*m));
  double w = log_pdf(*m, v);
  realize(x, v);
  return w;
}

Value Graph::value(const Value& v, Rng& rng) {
  if (v.is_tuple()) {
    if (!contains_sym(v)) return v;
    Tuple items;
    items.reserve(v.arity());
    for (const auto& x : v.as_tuple()) items.push_back(value(x, rng));
    return Value::tuple(std::move(items));
  }
  if (!v.is_sym()) return v;
  const SymExpr& s = *v.as_sym();
  switch (s.tag) {
    case SymExpr::Tag::Const: return s.c;
    case SymExpr::Tag::RVar: return sample_node(s.node, rng);
    case SymExpr::Tag::Affine: return Value::real(s.a * value(Value::sym(s.e), rng).as_float() + s.b);
    case SymExpr::Tag::AffineVec: {
      Eigen::VectorXd r = s.A * as_vec(value(Value::sym(s.e), rng)) + s.bv;
      return s.scalar_out ? Value::real(r[0]) : Value::vector(std::move(r));
    }
    case SymExpr::Tag::App: return apply_op(*s.op, value(s.arg, rng));
  }
  fail("unknown symbolic term");
}

DistPtr Graph::node_distribution(const Node& n) const {
  // Compose along the chain of initialized ancestors without mutating it.
  std::vector<const Node*> chain{&n};
  while (chain.back()->status == Status::Initialized) {
    const Node* p = chain.back()->parent.get();
    if (!p) fail("initialized node without a parent");
    chain.push_back(p);
  }
  const Node& top = *chain.back();
  DistPtr d;
  Value fixed;
  bool is_fixed = false;
  if (top.status == Status::Realized) {
    fixed = top.value;
    is_fixed = true;
  } else {
    d = top.marginal;
    if (top.mchild && top.mchild->status == Status::Realized) d = cond_posterior(top.mchild->cond, *d, top.mchild->value);
  }
  for (std::size_t i = chain.size() - 1; i-- > 0;) {
    const Node& x = *chain[i];
    d = is_fixed ? cond_given(x.cond, fixed, x.scalar_view) : cond_marginal(x.cond, *d);
    is_fixed = false;
  }
  if (is_fixed) return make_dirac(fixed);
  return view(n, d);
}

namespace {

DistPtr affine_of(const Distribution& d, double a, double b) {
  if (auto g = d.get<Distribution::Gaussian>()) return make_gaussian(a * g->mean + b, a * a * g->var);
  if (auto x = d.get<Distribution::Dirac>()) return make_dirac(Value::real(a * x->value.as_float() + b));
  return nullptr;
}

DistPtr affine_vec_of(const Distribution& d, const SymExpr& s) {
  if (auto g = d.get<Distribution::MvGaussian>()) {
    Eigen::VectorXd m = s.A * g->mean + s.bv;
    Eigen::MatrixXd c = s.A * g->cov * s.A.transpose();
    if (s.scalar_out) return make_gaussian(m[0], c(0, 0));
    return make_mv_gaussian(std::move(m), 0.5 * (c + c.transpose()));
  }
  if (auto g = d.get<Distribution::Gaussian>(); g && s.A.cols() == 1) {
    Eigen::VectorXd m = s.A.col(0) * g->mean + s.bv;
    Eigen::MatrixXd c = s.A * s.A.transpose() * g->var;
    if (s.scalar_out) return make_gaussian(m[0], c(0, 0));
    return make_mv_gaussian(std::move(m), c);
  }
  if (auto x = d.get<Distribution::Dirac>()) {
    Eigen::VectorXd r = s.A * as_vec(x->value) + s.bv;
    return make_dirac(s.scalar_out ? Value::real(r[0]) : Value::vector(std::move(r)));
  }
  return nullptr;
}

}  // namespace

DistPtr Graph::distribution_of(const Value& v) const {
  if (v.is_tuple()) {
    if (!contains_sym(v)) return make_dirac(v);
    std::vector<DistPtr> parts;
    for (const auto& x : v.as_tuple()) {
      DistPtr d = distribution_of(x);
      if (!d) return nullptr;
      parts.push_back(std::move(d));
    }
    return make_joint(std::move(parts));
  }
  if (!v.is_sym()) return make_dirac(v);
  const SymExpr& s = *v.as_sym();
  switch (s.tag) {
    case SymExpr::Tag::Const: return make_dirac(s.c);
    case SymExpr::Tag::RVar: return node_distribution(*s.node);
    case SymExpr::Tag::Affine: {
      DistPtr d = distribution_of(Value::sym(s.e));
      return d ? affine_of(*d, s.a, s.b) : nullptr;
    }
    case SymExpr::Tag::AffineVec: {
      DistPtr d = distribution_of(Value::sym(s.e));
      return d ? affine_vec_of(*d, s) : nullptr;
    }
    case SymExpr::Tag::App: {
      // Closed form only when every operand is already determined.
      DistPtr d = distribution_of(s.arg);
      if (!d) return nullptr;
      if (auto x = d->get<Distribution::Dirac>()) return make_dirac(apply_op(*s.op, x->value));
      if (auto j = d->get<Distribution::Joint>()) {
        Tuple vals;
        for (const auto& p : j->parts) {
          auto x = p->get<Distribution::Dirac>();
          if (!x) return nullptr;
          vals.push_back(x->value);
        }
        return make_dirac(apply_op(*s.op, Value::tuple(std::move(vals))));
      }
      return nullptr;
    }
  }
  return nullptr;
}

namespace {

class Copier {
 public:
  Copier(Graph& g, const std::shared_ptr<std::atomic<long>>& live) : g_(g), live_(live) {}

  NodePtr node(const NodePtr& n) {
    if (!n) return nullptr;
    auto it = memo_.find(n.get());
    if (it != memo_.end()) return it->second;
    auto c = std::make_shared<Node>(n->id, live_);
    memo_.emplace(n.get(), c);
    c->status = n->status;
    c->cond = n->cond;
    c->marginal = n->marginal;
    c->value = n->value;
    c->scalar_view = n->scalar_view;
    c->family = n->family;
    c->parent = node(n->parent);
    c->mchild = node(n->mchild);
    return c;
  }

  void fix_children(const std::vector<NodePtr>& originals) {
    for (const auto& o : originals) {
      NodePtr c = node(o);
      c->children.clear();
      for (Node* k : o->children) c->children.push_back(memo_.at(k).get());
    }
  }

  SymPtr sym(const SymPtr& s) {
    auto c = std::make_shared<SymExpr>(*s);
    if (s->node) c->node = node(s->node);
    if (s->e) c->e = sym(s->e);
    if (s->tag == SymExpr::Tag::App) c->arg = value(s->arg);
    return c;
  }

  Value value(const Value& v) {
    if (v.is_sym()) return Value::sym(sym(v.as_sym()));
    if (v.is_cell()) return Value::cell(v.as_cell()->clone());
    if (v.is_tuple() && (contains_sym(v) || has_cell(v))) {
      Tuple items;
      items.reserve(v.arity());
      for (const auto& x : v.as_tuple()) items.push_back(value(x));
      return Value::tuple(std::move(items));
    }
    return v;
  }

 private:
  static bool has_cell(const Value& v) {
    if (v.is_cell()) return true;
    if (v.is_tuple())
      for (const auto& x : v.as_tuple())
        if (has_cell(x)) return true;
    return false;
  }

  Graph& g_;
  const std::shared_ptr<std::atomic<long>>& live_;
  std::unordered_map<const Node*, NodePtr> memo_;
};

void collect(const Value& v, std::vector<NodePtr>& out);

void collect_sym(const SymExpr& s, std::vector<NodePtr>& out) {
  if (s.node) out.push_back(s.node);
  if (s.e) collect_sym(*s.e, out);
  if (s.tag == SymExpr::Tag::App) collect(s.arg, out);
}

void collect(const Value& v, std::vector<NodePtr>& out) {
  if (v.is_sym()) collect_sym(*v.as_sym(), out);
  else if (v.is_tuple())
    for (const auto& x : v.as_tuple()) collect(x, out);
}

}  // namespace

std::unique_ptr<Graph> Graph::deep_copy(const Value& state, Value& state_out) const {
  auto g = std::make_unique<Graph>(streaming_, live_);
  g->next_id_ = next_id_;
  Copier cp(*g, live_);
  if (!streaming_) {
    for (const auto& n : registry_) g->registry_.push_back(cp.node(n));
    cp.fix_children(registry_);
  }
  state_out = cp.value(state);
  return g;
}

std::string Graph::serialize(const Value& roots) const {
  std::vector<NodePtr> todo;
  collect(roots, todo);
  if (!streaming_) todo.insert(todo.end(), registry_.begin(), registry_.end());
  std::unordered_map<const Node*, bool> seen;
  std::vector<const Node*> nodes;
  while (!todo.empty()) {
    NodePtr n = todo.back();
    todo.pop_back();
    if (!n || seen[n.get()]) continue;
    seen[n.get()] = true;
    nodes.push_back(n.get());
    todo.push_back(n->parent);
    todo.push_back(n->mchild);
  }
  std::sort(nodes.begin(), nodes.end(), [](const Node* a, const Node* b) { return a->id < b->id; });
  std::ostringstream os;
  for (const Node* n : nodes) {
    os << 'X' << n->id << ' ' << status_name(n->status) << ' ' << n->family;
    if (n->parent) os << " parent=X" << n->parent->id;
    if (n->mchild) os << " mchild=X" << n->mchild->id;
    if (!n->children.empty()) {
      std::vector<long> ids;
      for (const Node* c : n->children) ids.push_back(c->id);
      std::sort(ids.begin(), ids.end());
      os << " children=";
      for (std::size_t i = 0; i < ids.size(); ++i) os << (i ? "," : "") << 'X' << ids[i];
    }
    if (n->marginal) os << " marginal=" << describe(*n->marginal);
    if (n->status == Status::Realized) os << " value=" << to_string(n->value);
    os << '\n';
  }
  return os.str();
}

}  // namespace ds

namespace {

std::string mat_str(const Eigen::MatrixXd& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? " " : "") + format_double(m(i, j));
  }
  return s + "]";
}

}  // namespace

std::string describe(const SymExpr& s) {
  switch (s.tag) {
    case SymExpr::Tag::Const: return to_string(s.c);
    case SymExpr::Tag::RVar: return "X" + std::to_string(s.node->id);
    case SymExpr::Tag::Affine: return "(" + format_double(s.a) + " * " + describe(*s.e) + " + " + format_double(s.b) + ")";
    case SymExpr::Tag::AffineVec:
      return "(" + mat_str(s.A) + " *@ " + describe(*s.e) + " +@ " + mat_str(s.bv) + ")";
    case SymExpr::Tag::App: return s.op->name + "(" + to_string(s.arg) + ")";
  }
  return "?";
}

SymPtr sym_rvar(ds::NodePtr n) {
  auto s = std::make_shared<SymExpr>();
  s->tag = SymExpr::Tag::RVar;
  s->node = std::move(n);
  return s;
}

SymPtr sym_affine(double a, SymPtr e, double b) {
  if (e->tag == SymExpr::Tag::Affine) {
    b += a * e->b;
    a *= e->a;
    e = e->e;
  } else if (e->tag == SymExpr::Tag::AffineVec && e->scalar_out) {
    return sym_affine_vec(a * e->A, e->e, a * e->bv + Eigen::VectorXd::Constant(1, b), true);
  }
  auto s = std::make_shared<SymExpr>();
  s->tag = SymExpr::Tag::Affine;
  s->a = a;
  s->b = b;
  s->e = std::move(e);
  return s;
}

SymPtr sym_affine_vec(Eigen::MatrixXd A, SymPtr e, Eigen::VectorXd b, bool scalar_out) {
  if (e->tag == SymExpr::Tag::AffineVec && !e->scalar_out) {
    b += A * e->bv;
    A = A * e->A;
    e = e->e;
  }
  auto s = std::make_shared<SymExpr>();
  s->tag = SymExpr::Tag::AffineVec;
  s->A = std::move(A);
  s->bv = std::move(b);
  s->scalar_out = scalar_out;
  s->e = std::move(e);
  return s;
}

SymPtr sym_app(const Op* op, Value arg) {
  auto s = std::make_shared<SymExpr>();
  s->tag = SymExpr::Tag::App;
  s->op = op;
  s->arg = std::move(arg);
  return s;
}

}  // namespace rpz
