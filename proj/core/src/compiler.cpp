// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/forms.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tenfem::forms {

namespace {

bool is_sym(int idx) { return idx < 0; }

struct FieldFactor {
  int slot = 0;  // 0..arity-1 arguments, then coefficients
  int comp_base = 0;
  int comp = 0;  // encoded component index relative to comp_base
  std::vector<int> derivs;
};

struct Monomial {
  double coeff = 1.0;
  int det_pow = 0;  // signed power of detJ collected from Piola factors
  std::vector<GeometryFactor> geo;
  std::vector<FieldFactor> fields;
};

void subst(Monomial& m, int from, int to) {
  for (auto& g : m.geo) {
    if (g.row == from) g.row = to;
    if (g.col == from) g.col = to;
  }
  for (auto& f : m.fields) {
    if (f.comp == from) f.comp = to;
    for (auto& d : f.derivs)
      if (d == from) d = to;
  }
}

int count_occurrences(const Monomial& m, int sym) {
  int n = 0;
  for (const auto& g : m.geo) n += (g.row == sym) + (g.col == sym);
  for (const auto& f : m.fields) {
    n += (f.comp == sym);
    for (int d : f.derivs) n += (d == sym);
  }
  return n;
}

struct Value {
  int rank = 0;
  bool symbolic = false;
  int free = 0;
  std::vector<Monomial> monos;
  std::array<std::vector<Monomial>, 3> comps;
};

struct LowerCtx {
  const FormIR* form = nullptr;
  int dim = 2;
  int next_sym = -1;
  int fresh() { return next_sym--; }
  const FiniteElement& slot_element(int slot) const {
    if (slot < form->arity()) return form->arguments[slot];
    return form->coefficients[slot - form->arity()];
  }
};

void scale_monos(std::vector<Monomial>& monos, double c) {
  for (auto& m : monos) m.coeff *= c;
}

Value to_concrete(const Value& v, int dim) {
  if (v.rank != 1) throw std::logic_error("to_concrete: rank 1 expected");
  if (!v.symbolic) return v;
  Value out;
  out.rank = 1;
  out.symbolic = false;
  for (int c = 0; c < dim; ++c) {
    out.comps[c] = v.monos;
    for (auto& m : out.comps[c]) subst(m, v.free, c);
  }
  return out;
}

void apply_phys_deriv(LowerCtx& ctx, Monomial& m, int x_idx) {
  if (m.fields.size() != 1)
    throw std::invalid_argument(
        "differential operator applied to a non-field expression");
  if (m.fields[0].derivs.size() >= 2)
    throw std::invalid_argument("derivative order beyond 2 in integrand");
  const int g = ctx.fresh();
  m.fields[0].derivs.push_back(g);
  m.geo.push_back({false, g, x_idx});
}

Value lower(const Expr& e, LowerCtx& ctx);

Value lower_field(LowerCtx& ctx, int slot, int block) {
  const FiniteElement& el = ctx.slot_element(slot);
  const FiniteElement* blk = &el;
  int base = 0;
  if (el.kind() == FiniteElement::Kind::Mixed) {
    if (block < 0 || block >= el.num_blocks())
      throw std::invalid_argument("mixed-space field requires a valid block");
    blk = &el.block(block);
    base = el.block_value_offset(block);
  } else if (block > 0) {
    throw std::invalid_argument("block index on a non-mixed space");
  }

  Value v;
  if (blk->value_size() == 1) {
    v.rank = 0;
    Monomial m;
    m.fields.push_back({slot, base, 0, {}});
    v.monos.push_back(std::move(m));
    return v;
  }
  v.rank = 1;
  v.symbolic = true;
  v.free = ctx.fresh();
  Monomial m;
  switch (blk->mapping()) {
    case MappingKind::Affine:
      m.fields.push_back({slot, base, v.free, {}});
      break;
    case MappingKind::Contravariant: {
      // phi[f] = (1/detJ) J[f][s] Phi[s]
      const int s = ctx.fresh();
      m.det_pow -= 1;
      m.geo.push_back({true, v.free, s});
      m.fields.push_back({slot, base, s, {}});
      break;
    }
    case MappingKind::Covariant: {
      // phi[f] = (J^-T)[f][s] Phi[s] = (dX_s/dx_f) Phi[s]
      const int s = ctx.fresh();
      m.geo.push_back({false, s, v.free});
      m.fields.push_back({slot, base, s, {}});
      break;
    }
  }
  v.monos.push_back(std::move(m));
  return v;
}

std::vector<Monomial> product(const std::vector<Monomial>& a,
                              const std::vector<Monomial>& b) {
  std::vector<Monomial> out;
  out.reserve(a.size() * b.size());
  for (const auto& ma : a)
    for (const auto& mb : b) {
      Monomial m = ma;
      m.coeff *= mb.coeff;
      m.det_pow += mb.det_pow;
      m.geo.insert(m.geo.end(), mb.geo.begin(), mb.geo.end());
      m.fields.insert(m.fields.end(), mb.fields.begin(), mb.fields.end());
      out.push_back(std::move(m));
    }
  return out;
}

Value lower(const Expr& e, LowerCtx& ctx) {
  const auto& n = e.node();
  using Op = Expr::Op;
  switch (n.op) {
    case Op::Argument:
      if (n.slot < 0 || n.slot >= ctx.form->arity())
        throw std::invalid_argument("argument slot out of range");
      return lower_field(ctx, n.slot, n.block);
    case Op::Coefficient:
      if (n.slot < 0 ||
          n.slot >= static_cast<int>(ctx.form->coefficients.size()))
        throw std::invalid_argument("coefficient id out of range");
      return lower_field(ctx, ctx.form->arity() + n.slot, n.block);

    case Op::Component: {
      Value v = lower(n.operands[0], ctx);
      if (v.rank != 1) throw std::invalid_argument("component of a scalar");
      if (n.comp < 0 || n.comp >= ctx.dim)
        throw std::invalid_argument("component index out of range");
      Value out;
      out.rank = 0;
      if (v.symbolic) {
        out.monos = v.monos;
        for (auto& m : out.monos) subst(m, v.free, n.comp);
      } else {
        out.monos = v.comps[n.comp];
      }
      return out;
    }

    case Op::Grad: {
      Value v = lower(n.operands[0], ctx);
      if (v.rank != 0) throw std::invalid_argument("grad expects a scalar");
      Value out;
      out.rank = 1;
      out.symbolic = true;
      out.free = ctx.fresh();
      out.monos = v.monos;
      for (auto& m : out.monos) apply_phys_deriv(ctx, m, out.free);
      return out;
    }

    case Op::Div: {
      Value v = lower(n.operands[0], ctx);
      if (v.rank != 1) throw std::invalid_argument("div expects a vector");
      Value out;
      out.rank = 0;
      if (v.symbolic) {
        out.monos = v.monos;
        for (auto& m : out.monos) apply_phys_deriv(ctx, m, v.free);
      } else {
        for (int c = 0; c < ctx.dim; ++c)
          for (auto m : v.comps[c]) {
            apply_phys_deriv(ctx, m, c);
            out.monos.push_back(std::move(m));
          }
      }
      return out;
    }

    case Op::Curl: {
      if (ctx.dim != 3) throw std::invalid_argument("curl requires 3D");
      Value v = to_concrete(lower(n.operands[0], ctx), 3);
      if (v.rank != 1) throw std::invalid_argument("curl expects a vector");
      Value out;
      out.rank = 1;
      out.symbolic = false;
      constexpr int idx[3][2] = {{1, 2}, {2, 0}, {0, 1}};
      for (int c = 0; c < 3; ++c) {
        const int a = idx[c][0], b = idx[c][1];
        for (auto m : v.comps[b]) {
          apply_phys_deriv(ctx, m, a);
          out.comps[c].push_back(std::move(m));
        }
        for (auto m : v.comps[a]) {
          apply_phys_deriv(ctx, m, b);
          m.coeff = -m.coeff;
          out.comps[c].push_back(std::move(m));
        }
      }
      return out;
    }

    case Op::Rot: {
      if (ctx.dim != 2) throw std::invalid_argument("rot requires 2D");
      Value v = to_concrete(lower(n.operands[0], ctx), 2);
      Value out;
      out.rank = 0;
      for (auto m : v.comps[1]) {
        apply_phys_deriv(ctx, m, 0);
        out.monos.push_back(std::move(m));
      }
      for (auto m : v.comps[0]) {
        apply_phys_deriv(ctx, m, 1);
        m.coeff = -m.coeff;
        out.monos.push_back(std::move(m));
      }
      return out;
    }

    case Op::Dot: {
      Value a = lower(n.operands[0], ctx);
      Value b = lower(n.operands[1], ctx);
      if (a.rank != 1 || b.rank != 1)
        throw std::invalid_argument("dot expects two vectors");
      Value out;
      out.rank = 0;
      if (a.symbolic && b.symbolic) {
        auto bm = b.monos;
        for (auto& m : bm) subst(m, b.free, a.free);
        out.monos = product(a.monos, bm);
      } else {
        a = to_concrete(a, ctx.dim);
        b = to_concrete(b, ctx.dim);
        for (int c = 0; c < ctx.dim; ++c) {
          auto p = product(a.comps[c], b.comps[c]);
          out.monos.insert(out.monos.end(), p.begin(), p.end());
        }
      }
      return out;
    }

    case Op::Mul: {
      Value a = lower(n.operands[0], ctx);
      Value b = lower(n.operands[1], ctx);
      if (a.rank != 0 || b.rank != 0)
        throw std::invalid_argument("operator* expects scalar expressions");
      Value out;
      out.rank = 0;
      out.monos = product(a.monos, b.monos);
      return out;
    }

    case Op::Add:
    case Op::Sub: {
      Value a = lower(n.operands[0], ctx);
      Value b = lower(n.operands[1], ctx);
      const double sign = n.op == Op::Sub ? -1.0 : 1.0;
      if (a.rank != b.rank) throw std::invalid_argument("rank mismatch in +/-");
      Value out;
      out.rank = a.rank;
      if (a.rank == 0) {
        out.monos = a.monos;
        scale_monos(b.monos, sign);
        out.monos.insert(out.monos.end(), b.monos.begin(), b.monos.end());
      } else if (a.symbolic && b.symbolic) {
        out.symbolic = true;
        out.free = a.free;
        out.monos = a.monos;
        for (auto m : b.monos) {
          subst(m, b.free, a.free);
          m.coeff *= sign;
          out.monos.push_back(std::move(m));
        }
      } else {
        a = to_concrete(a, ctx.dim);
        b = to_concrete(b, ctx.dim);
        out.symbolic = false;
        for (int c = 0; c < ctx.dim; ++c) {
          out.comps[c] = a.comps[c];
          for (auto m : b.comps[c]) {
            m.coeff *= sign;
            out.comps[c].push_back(std::move(m));
          }
        }
      }
      return out;
    }

    case Op::Scale: {
      Value v = lower(n.operands[0], ctx);
      scale_monos(v.monos, n.scale);
      for (auto& cm : v.comps) scale_monos(cm, n.scale);
      return v;
    }

    case Op::Trace: {
      if (static_cast<int>(n.operands.size()) != ctx.dim)
        throw std::invalid_argument("trace expects dim row expressions");
      Value out;
      out.rank = 0;
      for (int i = 0; i < ctx.dim; ++i) {
        Value row = lower(component(n.operands[i], i), ctx);
        out.monos.insert(out.monos.end(), row.monos.begin(), row.monos.end());
      }
      return out;
    }

    case Op::Skew: {
      // (tau_21 - tau_12) / 2 with tau_ij = rows[i][j]
      Value a = lower(component(n.operands[1], 0), ctx);
      Value b = lower(component(n.operands[0], 1), ctx);
      Value out;
      out.rank = 0;
      scale_monos(a.monos, 0.5);
      scale_monos(b.monos, -0.5);
      out.monos = a.monos;
      out.monos.insert(out.monos.end(), b.monos.begin(), b.monos.end());
      return out;
    }
  }
  throw std::logic_error("unhandled expression op");
}

// Contractions (dx_b/dX_a1)(dX_a2/dx_b) -> delta_{a1 a2} over symbols that
// occur in exactly two geometry factors.
bool kronecker_step(Monomial& m, int dim) {
  for (std::size_t i = 0; i < m.geo.size(); ++i)
    for (std::size_t j = 0; j < m.geo.size(); ++j) {
      if (i == j || m.geo[i].forward == m.geo[j].forward) continue;
      const GeometryFactor& F = m.geo[i].forward ? m.geo[i] : m.geo[j];
      const GeometryFactor& B = m.geo[i].forward ? m.geo[j] : m.geo[i];
      int p = 0, q = 0, beta = 0;
      if (is_sym(F.row) && F.row == B.col) {
        beta = F.row;
        p = F.col;
        q = B.row;
      } else if (is_sym(F.col) && F.col == B.row) {
        beta = F.col;
        p = F.row;
        q = B.col;
      } else {
        continue;
      }
      if (count_occurrences(m, beta) != 2) continue;

      std::vector<GeometryFactor> geo;
      for (std::size_t k = 0; k < m.geo.size(); ++k)
        if (k != i && k != j) geo.push_back(m.geo[k]);
      m.geo = std::move(geo);

      if (p == q) {
        if (is_sym(p) && count_occurrences(m, p) == 0) m.coeff *= dim;
      } else if (!is_sym(p) && !is_sym(q)) {
        m.coeff = 0.0;
      } else if (is_sym(p) && is_sym(q)) {
        subst(m, q, p);
      } else {
        const int sym = is_sym(p) ? p : q;
        const int fixed = is_sym(p) ? q : p;
        subst(m, sym, fixed);
      }
      return true;
    }
  return false;
}

std::string factor_string(const GeometryFactor& g) {
  auto idx = [](int v) {
    if (!is_sym(v)) return std::to_string(v);
    return "s" + std::to_string(-v);
  };
  std::ostringstream os;
  if (g.forward)
    os << "dx[" << idx(g.row) << "]/dX[" << idx(g.col) << "]";
  else
    os << "dX[" << idx(g.row) << "]/dx[" << idx(g.col) << "]";
  return os.str();
}

// Canonical serialization of a concrete geometry product; internal symbols
// are renamed over all permutations and the lexicographic minimum is kept.
std::pair<std::string, GeometryProduct> canonical_product(
    int gamma, std::vector<GeometryFactor> factors) {
  std::vector<int> syms;
  for (const auto& g : factors) {
    if (is_sym(g.row) && std::find(syms.begin(), syms.end(), g.row) == syms.end())
      syms.push_back(g.row);
    if (is_sym(g.col) && std::find(syms.begin(), syms.end(), g.col) == syms.end())
      syms.push_back(g.col);
  }
  std::sort(syms.begin(), syms.end());
  std::string best;
  std::vector<GeometryFactor> best_factors;
  std::vector<int> perm(syms.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    // one-shot rename keyed on the original ids; sequential substitution
    // could re-match an already renamed index
    std::map<int, int> rename;
    for (std::size_t k = 0; k < syms.size(); ++k)
      rename[syms[k]] = -static_cast<int>(perm[k]) - 1;
    auto renamed = factors;
    for (auto& g : renamed) {
      if (is_sym(g.row)) g.row = rename.at(g.row);
      if (is_sym(g.col)) g.col = rename.at(g.col);
    }
    std::sort(renamed.begin(), renamed.end(),
              [](const GeometryFactor& a, const GeometryFactor& b) {
                return std::tuple(a.forward, a.row, a.col) <
                       std::tuple(b.forward, b.row, b.col);
              });
    std::ostringstream os;
    os << gamma;
    for (const auto& g : renamed) os << '|' << factor_string(g);
    std::string s = os.str();
    if (best.empty() || s < best) {
      best = s;
      best_factors = renamed;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  GeometryProduct gp;
  gp.gamma = gamma;
  gp.factors = std::move(best_factors);
  gp.num_internal = static_cast<int>(syms.size());
  return {best, gp};
}

struct Contribution {
  int alpha = 0;
  double coeff = 1.0;
  std::vector<FieldFactor> fields;
};

int deriv_id_of(const Tabulation& tab, std::span<const int> derivs) {
  if (derivs.empty()) return 0;
  if (derivs.size() == 1) return 1 + derivs[0];
  return tab.deriv2_id(derivs[0], derivs[1]);
}

}  // namespace

TensorRepresentation compile(const FormIR& form, const CompileOptions& options) {
  if (form.arity() < 1 || form.arity() > 2)
    throw std::invalid_argument("compile: arity must be 1 or 2");
  const int dim = form.dim();

  LowerCtx ctx;
  ctx.form = &form;
  ctx.dim = dim;
  Value integrand = lower(form.integrand, ctx);
  if (integrand.rank != 0)
    throw std::invalid_argument("integrand must be scalar-valued");

  const int nslots = form.arity() + static_cast<int>(form.coefficients.size());

  // Multilinearity: every monomial holds each argument slot exactly once and
  // each declared coefficient exactly once.
  for (const auto& m : integrand.monos) {
    std::vector<int> count(nslots, 0);
    for (const auto& f : m.fields) count[f.slot] += 1;
    for (int s = 0; s < nslots; ++s)
      if (count[s] != 1)
        throw std::invalid_argument(
            s < form.arity() ? "integrand is not multilinear in the arguments"
                             : "coefficient must appear exactly once per term");
  }

  if (options.simplify)
    for (auto& m : integrand.monos)
      while (kronecker_step(m, dim)) {
      }

  TensorRepresentation rep;
  rep.form = form;
  for (const auto& a : form.arguments)
    rep.primary_shape.push_back(a.space_dimension());
  for (const auto& c : form.coefficients)
    rep.coefficient_shape.push_back(c.space_dimension());

  int qdeg = options.quadrature_degree;
  if (qdeg < 0) {
    qdeg = 0;
    for (const auto& a : form.arguments) qdeg += a.embedded_degree();
    for (const auto& c : form.coefficients) qdeg += c.embedded_degree();
  }
  rep.quadrature_degree = qdeg;

  // Enumerate linking indices and collect the distinct geometry products.
  std::map<std::string, int> alpha_of;
  std::vector<Contribution> contributions;
  int max_linking = 0;
  for (const auto& m : integrand.monos) {
    if (m.coeff == 0.0) continue;
    const int gamma = -m.det_pow;
    if (gamma < 0) throw std::logic_error("positive detJ power in monomial");

    std::vector<int> geo_syms, field_syms;
    for (const auto& g : m.geo)
      for (int v : {g.row, g.col})
        if (is_sym(v) &&
            std::find(geo_syms.begin(), geo_syms.end(), v) == geo_syms.end())
          geo_syms.push_back(v);
    for (const auto& f : m.fields) {
      auto note = [&](int v) {
        if (is_sym(v) &&
            std::find(field_syms.begin(), field_syms.end(), v) ==
                field_syms.end())
          field_syms.push_back(v);
      };
      note(f.comp);
      for (int d : f.derivs) note(d);
    }
    std::vector<int> linking;
    for (int s : geo_syms)
      if (std::find(field_syms.begin(), field_syms.end(), s) != field_syms.end())
        linking.push_back(s);
    std::sort(linking.begin(), linking.end());
    max_linking = std::max(max_linking, static_cast<int>(linking.size()));

    const int assignments =
        static_cast<int>(std::pow(dim, static_cast<int>(linking.size())) + 0.5);
    for (int a = 0; a < assignments; ++a) {
      Monomial inst = m;
      int code = a;
      for (int s : linking) {
        subst(inst, s, code % dim);
        code /= dim;
      }
      auto [key, gp] = canonical_product(gamma, inst.geo);
      auto it = alpha_of.find(key);
      if (it == alpha_of.end()) {
        it = alpha_of.emplace(key, static_cast<int>(rep.secondary.size())).first;
        rep.secondary.push_back(std::move(gp));
      }
      contributions.push_back({it->second, inst.coeff, inst.fields});
    }
  }
  rep.secondary_rank = max_linking;

  // Reference-cell integration of every contribution.
  const QuadratureRule rule = make_rule(form.cell(), qdeg);
  int max_deriv = 0;
  for (const auto& c : contributions)
    for (const auto& f : c.fields)
      max_deriv = std::max(max_deriv, static_cast<int>(f.derivs.size()));

  std::vector<Tabulation> tabs;
  for (int s = 0; s < nslots; ++s) {
    const FiniteElement& el = s < form.arity()
                                  ? form.arguments[s]
                                  : form.coefficients[s - form.arity()];
    tabs.push_back(el.tabulate(rule.points, max_deriv));
  }

  std::size_t a0_size = 1;
  for (int v : rep.primary_shape) a0_size *= v;
  for (int v : rep.coefficient_shape) a0_size *= v;
  a0_size *= rep.secondary.size();
  rep.reference_tensor.assign(a0_size, 0.0);

  // Strides of [primary..., coefficients..., alpha], row-major.
  std::vector<int> dims;
  for (int v : rep.primary_shape) dims.push_back(v);
  for (int v : rep.coefficient_shape) dims.push_back(v);
  dims.push_back(static_cast<int>(rep.secondary.size()));
  std::vector<std::size_t> strides(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k)
    strides[k] = strides[k + 1] * dims[k + 1];

  for (const auto& c : contributions) {
    // Remaining symbols are reference-internal; sum over their assignments.
    std::vector<int> syms;
    for (const auto& f : c.fields) {
      auto note = [&](int v) {
        if (is_sym(v) && std::find(syms.begin(), syms.end(), v) == syms.end())
          syms.push_back(v);
      };
      note(f.comp);
      for (int d : f.derivs) note(d);
    }
    const int nsym = static_cast<int>(syms.size());
    const int sym_assignments = static_cast<int>(std::pow(dim, nsym) + 0.5);

    // Factors ordered by slot for the accumulation loops.
    auto fields = c.fields;
    std::sort(fields.begin(), fields.end(),
              [](const FieldFactor& a, const FieldFactor& b) {
                return a.slot < b.slot;
              });

    for (int sa = 0; sa < sym_assignments; ++sa) {
      auto inst = fields;
      int code = sa;
      for (int s : syms) {
        const int val = code % dim;
        code /= dim;
        for (auto& f : inst) {
          if (f.comp == s) f.comp = val;
          for (auto& d : f.derivs)
            if (d == s) d = val;
        }
      }
      // values[f][q][basis]
      std::vector<std::vector<std::vector<double>>> values(inst.size());
      for (std::size_t fi = 0; fi < inst.size(); ++fi) {
        const auto& f = inst[fi];
        const Tabulation& tab = tabs[f.slot];
        const int did = deriv_id_of(tab, f.derivs);
        values[fi].resize(rule.num_points());
        for (int q = 0; q < rule.num_points(); ++q) {
          values[fi][q].resize(tab.num_basis);
          for (int b = 0; b < tab.num_basis; ++b)
            values[fi][q][b] = tab.at(did, b, f.comp_base + f.comp, q);
        }
      }
      // Accumulate the outer product over basis indices per slot.
      std::vector<int> basis(inst.size(), 0);
      for (int q = 0; q < rule.num_points(); ++q) {
        const double wq = rule.weights[q] * c.coeff;
        // recursive accumulation over factor index
        auto recurse = [&](auto&& self, std::size_t fi, double acc,
                           std::size_t offset) -> void {
          if (fi == inst.size()) {
            rep.reference_tensor[offset + static_cast<std::size_t>(c.alpha)] +=
                acc;
            return;
          }
          const int slot = inst[fi].slot;
          const auto& vals = values[fi][q];
          for (int b = 0; b < static_cast<int>(vals.size()); ++b) {
            if (vals[b] == 0.0) continue;
            self(self, fi + 1, acc * vals[b],
                 offset + static_cast<std::size_t>(b) * strides[slot]);
          }
        };
        recurse(recurse, 0, wq, 0);
      }
    }
  }
  return rep;
}

namespace {

double eval_geometry_product(const GeometryProduct& gp,
                             const Eigen::MatrixXd& J, const Eigen::MatrixXd& K,
                             int dim) {
  const int nsym = gp.num_internal;
  const int assignments = static_cast<int>(std::pow(dim, nsym) + 0.5);
  double total = 0.0;
  std::vector<int> value(nsym, 0);
  for (int a = 0; a < assignments; ++a) {
    int code = a;
    for (int s = 0; s < nsym; ++s) {
      value[s] = code % dim;
      code /= dim;
    }
    double prod = 1.0;
    for (const auto& g : gp.factors) {
      const int r = is_sym(g.row) ? value[-g.row - 1] : g.row;
      const int c = is_sym(g.col) ? value[-g.col - 1] : g.col;
      prod *= g.forward ? J(r, c) : K(r, c);
    }
    total += prod;
  }
  return total;
}

}  // namespace

std::vector<double> geometry_tensor(
    const TensorRepresentation& rep, const CellGeometry& geometry,
    std::span<const Eigen::VectorXd> coefficient_dofs) {
  if (geometry.det_jacobian == 0.0)
    throw std::invalid_argument("geometry_tensor: degenerate geometry");
  if (coefficient_dofs.size() != rep.coefficient_shape.size())
    throw std::invalid_argument("geometry_tensor: coefficient count mismatch");
  const int dim = geometry.dim();
  const Eigen::MatrixXd& J = geometry.jacobian;
  const Eigen::MatrixXd K = geometry.jacobian_inverse_transposed.transpose();
  const double det = geometry.det_jacobian;
  const double absdet = std::abs(det);

  std::vector<double> geo_vals(rep.secondary.size());
  for (std::size_t a = 0; a < rep.secondary.size(); ++a) {
    const auto& gp = rep.secondary[a];
    geo_vals[a] = absdet / std::pow(det, gp.gamma) *
                  eval_geometry_product(gp, J, K, dim);
  }

  std::size_t total = rep.secondary.size();
  for (std::size_t k = 0; k < coefficient_dofs.size(); ++k) {
    if (coefficient_dofs[k].size() != rep.coefficient_shape[k])
      throw std::invalid_argument("geometry_tensor: coefficient size mismatch");
    total *= rep.coefficient_shape[k];
  }
  std::vector<double> G(total);
  const std::size_t nsec = rep.secondary.size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx / nsec;
    double w = geo_vals[idx % nsec];
    for (int k = static_cast<int>(coefficient_dofs.size()) - 1; k >= 0; --k) {
      const int nk = rep.coefficient_shape[k];
      w *= coefficient_dofs[k][rest % nk];
      rest /= nk;
    }
    G[idx] = w;
  }
  return G;
}

std::vector<double> contract(const TensorRepresentation& rep,
                             std::span<const double> G) {
  std::size_t nprim = 1;
  for (int v : rep.primary_shape) nprim *= v;
  const std::size_t ninner = rep.reference_tensor.size() / std::max<std::size_t>(nprim, 1);
  if (G.size() != ninner)
    throw std::invalid_argument("contract: geometry tensor shape mismatch");
  std::vector<double> out(nprim, 0.0);
  for (std::size_t i = 0; i < nprim; ++i) {
    double acc = 0.0;
    const double* a0 = rep.reference_tensor.data() + i * ninner;
    for (std::size_t k = 0; k < ninner; ++k) acc += a0[k] * G[k];
    out[i] = acc;
  }
  return out;
}

std::string TensorRepresentation::dump() const {
  std::ostringstream os;
  os << "tensor representation\n";
  os << "primary:";
  for (int v : primary_shape) os << ' ' << v;
  os << "\ncoefficients:";
  if (coefficient_shape.empty()) os << " none";
  for (int v : coefficient_shape) os << ' ' << v;
  os << "\nsecondary: " << secondary.size() << " (rank " << secondary_rank
     << ")\nquadrature degree: " << quadrature_degree << "\n";
  for (std::size_t a = 0; a < secondary.size(); ++a) {
    os << "G[" << a << "] = |detJ|/(detJ)^" << secondary[a].gamma;
    for (const auto& g : secondary[a].factors) os << " * " << factor_string(g);
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Quadrature oracle: direct pointwise evaluation of the integrand.

namespace {

struct EvalVal {
  int rank = 0;
  bool has_deriv = false;
  std::array<double, 3> v{};
  std::array<std::array<double, 3>, 3> d{};  // d[comp][x]
};

struct PointCtx {
  int dim = 2;
  const FormIR* form = nullptr;
  // per argument slot: physical tabulation and active basis index
  std::vector<const Tabulation*> tabs;
  std::vector<int> basis;
  // per coefficient: values and first derivatives at this point
  std::vector<std::vector<double>> coeff_values;           // [id][comp]
  std::vector<std::vector<std::array<double, 3>>> coeff_d; // [id][comp][x]
  bool coeff_has_deriv = true;
  int q = 0;
};

EvalVal eval(const Expr& e, const PointCtx& ctx);

EvalVal eval_field(const PointCtx& ctx, int slot, int block, bool coefficient) {
  const FiniteElement& el = coefficient ? ctx.form->coefficients[slot]
                                        : ctx.form->arguments[slot];
  const FiniteElement* blk = &el;
  int base = 0;
  if (el.kind() == FiniteElement::Kind::Mixed) {
    blk = &el.block(block);
    base = el.block_value_offset(block);
  }
  EvalVal out;
  const int vs = blk->value_size();
  if (vs > 3)
    throw std::invalid_argument("field expression must be scalar or vector");
  out.rank = vs == 1 ? 0 : 1;
  if (!coefficient) {
    const Tabulation& tab = *ctx.tabs[slot];
    const int b = ctx.basis[slot];
    out.has_deriv = tab.deriv_order >= 1;
    for (int c = 0; c < vs; ++c) {
      out.v[c] = tab.value(b, base + c, ctx.q);
      if (out.has_deriv)
        for (int x = 0; x < ctx.dim; ++x)
          out.d[c][x] = tab.deriv1(x, b, base + c, ctx.q);
    }
  } else {
    out.has_deriv = ctx.coeff_has_deriv;
    for (int c = 0; c < vs; ++c) {
      out.v[c] = ctx.coeff_values[slot][base + c];
      if (out.has_deriv)
        for (int x = 0; x < ctx.dim; ++x)
          out.d[c][x] = ctx.coeff_d[slot][base + c][x];
    }
  }
  return out;
}

EvalVal eval(const Expr& e, const PointCtx& ctx) {
  const auto& n = e.node();
  using Op = Expr::Op;
  switch (n.op) {
    case Op::Argument:
      return eval_field(ctx, n.slot, n.block, false);
    case Op::Coefficient:
      return eval_field(ctx, n.slot, n.block, true);
    case Op::Component: {
      EvalVal a = eval(n.operands[0], ctx);
      EvalVal out;
      out.rank = 0;
      out.has_deriv = a.has_deriv;
      out.v[0] = a.v[n.comp];
      out.d[0] = a.d[n.comp];
      return out;
    }
    case Op::Grad: {
      EvalVal a = eval(n.operands[0], ctx);
      if (!a.has_deriv) throw std::logic_error("grad of a derivative-free value");
      EvalVal out;
      out.rank = 1;
      for (int x = 0; x < ctx.dim; ++x) out.v[x] = a.d[0][x];
      return out;
    }
    case Op::Div: {
      EvalVal a = eval(n.operands[0], ctx);
      if (!a.has_deriv) throw std::logic_error("div of a derivative-free value");
      EvalVal out;
      out.rank = 0;
      for (int x = 0; x < ctx.dim; ++x) out.v[0] += a.d[x][x];
      return out;
    }
    case Op::Curl: {
      EvalVal a = eval(n.operands[0], ctx);
      if (!a.has_deriv) throw std::logic_error("curl of a derivative-free value");
      EvalVal out;
      out.rank = 1;
      out.v[0] = a.d[2][1] - a.d[1][2];
      out.v[1] = a.d[0][2] - a.d[2][0];
      out.v[2] = a.d[1][0] - a.d[0][1];
      return out;
    }
    case Op::Rot: {
      EvalVal a = eval(n.operands[0], ctx);
      if (!a.has_deriv) throw std::logic_error("rot of a derivative-free value");
      EvalVal out;
      out.rank = 0;
      out.v[0] = a.d[1][0] - a.d[0][1];
      return out;
    }
    case Op::Dot: {
      EvalVal a = eval(n.operands[0], ctx);
      EvalVal b = eval(n.operands[1], ctx);
      EvalVal out;
      out.rank = 0;
      for (int c = 0; c < ctx.dim; ++c) out.v[0] += a.v[c] * b.v[c];
      return out;
    }
    case Op::Mul: {
      EvalVal a = eval(n.operands[0], ctx);
      EvalVal b = eval(n.operands[1], ctx);
      EvalVal out;
      out.rank = 0;
      out.v[0] = a.v[0] * b.v[0];
      return out;
    }
    case Op::Add:
    case Op::Sub: {
      EvalVal a = eval(n.operands[0], ctx);
      EvalVal b = eval(n.operands[1], ctx);
      const double s = n.op == Op::Sub ? -1.0 : 1.0;
      EvalVal out = a;
      out.has_deriv = a.has_deriv && b.has_deriv;
      for (int c = 0; c < 3; ++c) {
        out.v[c] += s * b.v[c];
        for (int x = 0; x < 3; ++x) out.d[c][x] += s * b.d[c][x];
      }
      return out;
    }
    case Op::Scale: {
      EvalVal a = eval(n.operands[0], ctx);
      for (int c = 0; c < 3; ++c) {
        a.v[c] *= n.scale;
        for (int x = 0; x < 3; ++x) a.d[c][x] *= n.scale;
      }
      return a;
    }
    case Op::Trace: {
      EvalVal out;
      out.rank = 0;
      for (int i = 0; i < ctx.dim; ++i) {
        EvalVal row = eval(n.operands[i], ctx);
        out.v[0] += row.v[i];
      }
      return out;
    }
    case Op::Skew: {
      EvalVal r0 = eval(n.operands[0], ctx);
      EvalVal r1 = eval(n.operands[1], ctx);
      EvalVal out;
      out.rank = 0;
      out.v[0] = 0.5 * (r1.v[0] - r0.v[1]);
      return out;
    }
  }
  throw std::logic_error("unhandled expression op");
}

std::vector<double> oracle_impl(
    const FormIR& form, const CellGeometry& geometry,
    std::span<const Eigen::VectorXd> coefficient_dofs,
    std::span<const AnalyticCoefficient> analytic, int quadrature_degree) {
  int qdeg = quadrature_degree;
  if (qdeg < 0) {
    qdeg = 0;
    for (const auto& a : form.arguments) qdeg += a.embedded_degree();
    for (const auto& c : form.coefficients) qdeg += c.embedded_degree();
  }
  const QuadratureRule rule = make_rule(form.cell(), qdeg);
  const int dim = form.dim();

  std::vector<Tabulation> phys;
  for (const auto& a : form.arguments)
    phys.push_back(map_basis(a, geometry, a.tabulate(rule.points, 1)));

  const bool use_analytic = !analytic.empty();
  std::vector<Tabulation> coeff_phys;
  if (!use_analytic)
    for (const auto& c : form.coefficients)
      coeff_phys.push_back(map_basis(c, geometry, c.tabulate(rule.points, 1)));

  PointCtx ctx;
  ctx.dim = dim;
  ctx.form = &form;
  ctx.tabs.resize(form.arity());
  ctx.basis.assign(form.arity(), 0);
  for (int s = 0; s < form.arity(); ++s) ctx.tabs[s] = &phys[s];

  const int ncoeff = static_cast<int>(form.coefficients.size());
  ctx.coeff_values.resize(ncoeff);
  ctx.coeff_d.resize(ncoeff);
  ctx.coeff_has_deriv = !use_analytic;

  std::vector<int> shape;
  for (const auto& a : form.arguments) shape.push_back(a.space_dimension());
  std::size_t total = 1;
  for (int v : shape) total *= v;
  std::vector<double> out(total, 0.0);
  const double absdet = std::abs(geometry.det_jacobian);

  for (int q = 0; q < rule.num_points(); ++q) {
    ctx.q = q;
    for (int k = 0; k < ncoeff; ++k) {
      const int vs = form.coefficients[k].value_size();
      ctx.coeff_values[k].assign(vs, 0.0);
      ctx.coeff_d[k].assign(vs, {0.0, 0.0, 0.0});
      if (use_analytic) {
        Eigen::VectorXd X(dim);
        for (int a = 0; a < dim; ++a) X[a] = rule.points[q][a];
        const Eigen::VectorXd x = geometry.jacobian * X + geometry.translation;
        const Eigen::VectorXd val = analytic[k](x);
        for (int c = 0; c < vs; ++c) ctx.coeff_values[k][c] = val[c];
      } else {
        const Tabulation& tab = coeff_phys[k];
        const Eigen::VectorXd& dofs = coefficient_dofs[k];
        for (int b = 0; b < tab.num_basis; ++b) {
          if (dofs[b] == 0.0) continue;
          for (int c = 0; c < vs; ++c) {
            ctx.coeff_values[k][c] += dofs[b] * tab.value(b, c, q);
            for (int x = 0; x < dim; ++x)
              ctx.coeff_d[k][c][x] += dofs[b] * tab.deriv1(x, b, c, q);
          }
        }
      }
    }
    const double w = rule.weights[q] * absdet;
    if (form.arity() == 1) {
      for (int i = 0; i < shape[0]; ++i) {
        ctx.basis[0] = i;
        out[i] += w * eval(form.integrand, ctx).v[0];
      }
    } else {
      for (int i = 0; i < shape[0]; ++i) {
        ctx.basis[0] = i;
        for (int j = 0; j < shape[1]; ++j) {
          ctx.basis[1] = j;
          out[static_cast<std::size_t>(i) * shape[1] + j] +=
              w * eval(form.integrand, ctx).v[0];
        }
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> evaluate_by_quadrature(
    const FormIR& form, const CellGeometry& geometry,
    std::span<const Eigen::VectorXd> coefficient_dofs, int quadrature_degree) {
  if (coefficient_dofs.size() != form.coefficients.size())
    throw std::invalid_argument("evaluate_by_quadrature: coefficient mismatch");
  return oracle_impl(form, geometry, coefficient_dofs, {}, quadrature_degree);
}

std::vector<double> evaluate_by_quadrature_analytic(
    const FormIR& form, const CellGeometry& geometry,
    std::span<const AnalyticCoefficient> coefficients, int quadrature_degree) {
  if (coefficients.size() != form.coefficients.size())
    throw std::invalid_argument("evaluate_by_quadrature: coefficient mismatch");
  return oracle_impl(form, geometry, {}, coefficients, quadrature_degree);
}

}  // namespace tenfem::forms
