#include <set>

#include "rpz/frontend.hpp"

namespace rpz {

namespace {

using T = KernelExpr::Tag;

// Names read directly (outside `last`) by an expression, excluding names bound
// by nested blocks.
void direct_reads(const KernelExpr& e, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (e.tag) {
    case T::Var:
      if (!bound.count(e.name)) out.insert(e.name);
      return;
    case T::Last: return;
    case T::WhereRec: {
      std::vector<std::string> added;
      for (const auto& q : e.eqs) {
        std::vector<std::string> ns;
        q.lhs.names(ns);
        for (const auto& n : ns)
          if (bound.insert(n).second) added.push_back(n);
      }
      for (const auto& q : e.eqs) direct_reads(*q.rhs, bound, out);
      for (const auto& i : e.inits) direct_reads(*i.value, bound, out);
      direct_reads(*e.kids[0], bound, out);
      for (const auto& n : added) bound.erase(n);
      return;
    }
    default:
      for (const auto& k : e.kids) direct_reads(*k, bound, out);
  }
}

}  // namespace

std::set<std::string> direct_reads(const KernelExpr& e) {
  std::set<std::string> bound, out;
  direct_reads(e, bound, out);
  return out;
}

namespace {

void schedule_expr(const KPtr& e) {
  if (!e) return;
  for (const auto& k : e->kids) schedule_expr(k);
  for (const auto& q : e->eqs) schedule_expr(q.rhs);
  if (e->tag == T::WhereRec) {
    ScheduledBlock b = schedule(*e);
    e->eqs = std::move(b.eqs);
  }
}

}  // namespace

ScheduledBlock schedule(const KernelExpr& w) {
  if (w.tag != T::WhereRec) throw Error(ErrorKind::Schedule, "schedule expects a where block");
  const std::size_t n = w.eqs.size();
  std::set<std::string> names;
  for (const auto& q : w.eqs) {
    std::vector<std::string> ns;
    q.lhs.names(ns);
    names.insert(ns.begin(), ns.end());
  }
  std::vector<std::set<std::string>> deps(n);
  std::vector<std::vector<std::string>> defs(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::string> bound, reads;
    direct_reads(*w.eqs[i].rhs, bound, reads);
    for (const auto& r : reads)
      if (names.count(r)) deps[i].insert(r);
    w.eqs[i].lhs.names(defs[i]);
  }
  ScheduledBlock out;
  out.inits = w.inits;
  out.result = w.kids.at(0);
  std::vector<bool> done(n, false);
  std::set<std::string> written;
  for (std::size_t round = 0; round < n; ++round) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n && pick == n; ++i) {
      if (done[i]) continue;
      bool ready = true;
      for (const auto& d : deps[i])
        if (!written.count(d)) {
          ready = false;
          break;
        }
      if (ready) pick = i;
    }
    if (pick == n) {
      std::string cyc;
      for (std::size_t i = 0; i < n; ++i)
        if (!done[i]) cyc += (cyc.empty() ? "" : ", ") + w.eqs[i].lhs.str();
      throw Error(ErrorKind::Schedule, "instantaneous cycle between " + cyc + " at " + w.loc.str());
    }
    done[pick] = true;
    written.insert(defs[pick].begin(), defs[pick].end());
    out.eqs.push_back(w.eqs[pick]);
  }
  return out;
}

void schedule_program(KernelProgram& prog) {
  for (auto& d : prog.decls) schedule_expr(d.body);
}

KernelProgram load_program(const std::string& source) {
  KernelProgram p = desugar(parse(source));
  kind_check(p);
  schedule_program(p);
  return p;
}

}  // namespace rpz
