#include "syncdrf/ldrf.hpp"

#include <sstream>

namespace syncdrf {

VersionedEnv zero_env(const Program &p) {
  return {std::vector<Value>(p.vars.size(), 0),
          std::vector<Version>(p.vars.size(), 0)};
}

LdrfState initial_ldrf_state(const Program &p) {
  LdrfState s;
  for (const ThreadCFG &t : p.threads)
    s.pc.push_back(t.entry);
  s.mu.assign(p.locks.size(), kNoHolder);
  s.theta.assign(p.threads.size(), zero_env(p));
  for (Loc l : p.post_release_points())
    s.lambda[l] = zero_env(p);
  return s;
}

std::set<std::pair<Value, Version>> take(VarId x,
                                         const std::vector<VersionedEnv> &ys) {
  if (ys.empty())
    throw std::invalid_argument("take: empty set of environments");
  Version top = 0;
  for (const VersionedEnv &y : ys)
    top = std::max(top, y.nu.at(x));
  std::set<std::pair<Value, Version>> out;
  for (const VersionedEnv &y : ys)
    if (y.nu[x] == top)
      out.insert({y.phi[x], top});
  return out;
}

std::vector<VersionedEnv> upd_env(const VersionedEnv &ve,
                                  const std::vector<VersionedEnv> &xs) {
  std::vector<VersionedEnv> ys{ve};
  ys.insert(ys.end(), xs.begin(), xs.end());
  std::vector<VersionedEnv> out{VersionedEnv{}};
  for (VarId x = 0; x < ve.phi.size(); ++x) {
    std::vector<VersionedEnv> next;
    for (const auto &[v, n] : take(x, ys))
      for (VersionedEnv e : out) {
        e.phi.push_back(v);
        e.nu.push_back(n);
        next.push_back(std::move(e));
      }
    out = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Loc> relevant_buffers(const Program &p, LockId m, Loc pre_acquire,
                                  const LdrfOptions &opts) {
  std::vector<Loc> out;
  for (Loc l : p.post_release_points(m)) {
    if (opts.gamma) {
      auto it = opts.gamma->find(l);
      if (it == opts.gamma->end() || !it->second.count(pre_acquire))
        continue;
    }
    out.push_back(l);
  }
  return out;
}

std::vector<LdrfState> ldrf_step(const Program &p, const LdrfState &s,
                                 const Instruction &ins, const LdrfOptions &opts,
                                 const std::vector<Value> &havoc_values) {
  std::vector<LdrfState> out;
  const ThreadId t = ins.thread;
  if (s.pc.at(t) != ins.source)
    return out;
  const Command &c = ins.command;
  const VersionedEnv &local = s.theta[t];
  switch (c.kind) {
  case Command::Kind::Assign:
    for (Value v : evaluate_all(c.expr, local.phi, havoc_values)) {
      LdrfState n = s;
      VersionedEnv &e = n.theta[t];
      e.phi[c.var] = v;
      if (opts.bump_versions) {
        if (opts.regions) {
          RegionId r = opts.regions->region_of.at(c.var);
          for (VarId y = 0; y < e.nu.size(); ++y)
            if (opts.regions->region_of[y] == r)
              ++e.nu[y];
        } else {
          ++e.nu[c.var];
        }
      }
      n.pc[t] = ins.target;
      out.push_back(std::move(n));
    }
    break;
  case Command::Kind::Assume:
    if (evaluate(c.cond, local.phi)) {
      out.push_back(s);
      out.back().pc[t] = ins.target;
    }
    break;
  case Command::Kind::Acquire: {
    if (s.mu.at(c.lock) != kNoHolder)
      break;
    std::vector<VersionedEnv> bufs;
    for (Loc l : relevant_buffers(p, c.lock, ins.source, opts))
      bufs.push_back(s.lambda.at(l));
    std::vector<VersionedEnv> upd = upd_env(local, bufs);
    if (upd.size() != 1)
      throw AdmissibilityError("acquire at " + std::to_string(ins.source) +
                               " found conflicting values at one version");
    LdrfState n = s;
    n.theta[t] = std::move(upd[0]);
    n.mu[c.lock] = static_cast<int>(t);
    n.pc[t] = ins.target;
    out.push_back(std::move(n));
    break;
  }
  case Command::Kind::Release:
    if (s.mu.at(c.lock) != static_cast<int>(t))
      break;
    out.push_back(s);
    out.back().lambda[ins.target] = local;
    out.back().mu[c.lock] = kNoHolder;
    out.back().pc[t] = ins.target;
    break;
  }
  return out;
}

StdState extract_chi(const LdrfState &s) {
  StdState r;
  r.pc = s.pc;
  r.mu = s.mu;
  if (s.theta.empty())
    return r;
  const std::size_t nv = s.theta[0].phi.size();
  r.phi.assign(nv, 0);
  for (VarId x = 0; x < nv; ++x) {
    Version top = 0;
    std::optional<Value> val;
    for (const VersionedEnv &e : s.theta) {
      if (!val || e.nu[x] > top) {
        top = e.nu[x];
        val = e.phi[x];
      } else if (e.nu[x] == top && e.phi[x] != *val) {
        throw AdmissibilityError("extract_chi: variable " + std::to_string(x) +
                                 " has two values at version " +
                                 std::to_string(top));
      }
    }
    r.phi[x] = *val;
  }
  return r;
}

bool is_admissible(const LdrfState &s) {
  std::vector<const VersionedEnv *> all;
  for (const VersionedEnv &e : s.theta)
    all.push_back(&e);
  for (const auto &[l, e] : s.lambda)
    all.push_back(&e);
  if (all.empty())
    return true;
  const std::size_t nv = all[0]->phi.size();
  for (VarId x = 0; x < nv; ++x) {
    std::map<Version, Value> seen;
    for (const VersionedEnv *e : all) {
      auto [it, fresh] = seen.emplace(e->nu[x], e->phi[x]);
      if (!fresh && it->second != e->phi[x])
        return false;
    }
  }
  return true;
}

std::string format_versioned_env(const Program &p, const VersionedEnv &ve) {
  std::ostringstream os;
  os << "[";
  for (VarId x = 0; x < ve.phi.size(); ++x)
    os << (x ? ", " : "") << p.vars[x] << "↦" << ve.phi[x] << "^" << ve.nu[x];
  os << "]";
  return os.str();
}

std::string format_ldrf_state(const Program &p, const LdrfState &s) {
  std::ostringstream os;
  os << "pc=[";
  for (std::size_t t = 0; t < s.pc.size(); ++t)
    os << (t ? "," : "") << p.threads[t].name << ":" << s.pc[t];
  os << "] mu=[";
  for (std::size_t m = 0; m < s.mu.size(); ++m)
    os << (m ? "," : "") << p.locks[m] << ":"
       << (s.mu[m] == kNoHolder ? std::string("-") : p.threads[s.mu[m]].name);
  os << "]";
  for (std::size_t t = 0; t < s.theta.size(); ++t)
    os << " " << p.threads[t].name << "=" << format_versioned_env(p, s.theta[t]);
  for (const auto &[l, e] : s.lambda)
    os << " L" << l << "=" << format_versioned_env(p, e);
  return os.str();
}

} // namespace syncdrf
