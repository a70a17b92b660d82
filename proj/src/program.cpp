#include "dbs/program.hpp"

#include <algorithm>
#include <stdexcept>

namespace dbs {

namespace {

inline void hash_mix(std::size_t& h, std::size_t x) { h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); }

Type type_of_value(const Value& v) {
  if (v.is_int()) return Type::integer();
  if (v.is_bool()) return Type::boolean();
  if (v.is_list()) {
    const auto& l = v.as_list();
    return Type::list(l.empty() ? Type::integer() : type_of_value(l.front()));
  }
  if (v.is_function()) return v.as_function()->signature;
  throw TypeError("error values cannot be program constants");
}

}  // namespace

Program Program::variable(std::uint32_t index) {
  auto n = std::make_shared<ProgramNode>();
  n->kind = NodeKind::Variable;
  n->var = index;
  n->hash = 0x51ed270b27b2f3a1ULL;
  hash_mix(n->hash, index);
  return Program(std::move(n));
}

Program Program::apply(const PrimitiveInstance& prim, std::vector<Program> args) {
  if (args.size() != prim.arity()) {
    throw std::invalid_argument("primitive " + prim.label + " expects " + std::to_string(prim.arity()) +
                                " arguments, got " + std::to_string(args.size()));
  }
  auto n = std::make_shared<ProgramNode>();
  n->kind = NodeKind::Apply;
  n->prim = &prim;
  n->hash = prim.label_hash;
  std::uint32_t depth = 0;
  for (const auto& a : args) {
    if (!a) throw std::invalid_argument("null argument to " + prim.label);
    hash_mix(n->hash, a.hash());
    n->size += a.size();
    depth = std::max(depth, a.depth());
  }
  n->depth = depth + 1;
  n->args = std::move(args);
  return Program(std::move(n));
}

Program Program::constant(Value v, Type type) {
  if (v.is_error()) throw TypeError("error values cannot be program constants");
  auto n = std::make_shared<ProgramNode>();
  n->kind = NodeKind::Constant;
  n->hash = 0x2545f4914f6cdd1dULL;
  hash_mix(n->hash, v.hash());
  n->constant = std::make_shared<const ConstantPayload>(ConstantPayload{std::move(v), std::move(type)});
  return Program(std::move(n));
}

Program Program::constant(Value v) {
  Type t = type_of_value(v);
  return constant(std::move(v), std::move(t));
}

std::string Program::to_string() const {
  switch (kind()) {
    case NodeKind::Variable: return "var" + std::to_string(var_index());
    case NodeKind::Constant: return value().to_string();
    case NodeKind::Apply: {
      if (args().empty()) return primitive().name();
      std::string s = "(" + primitive().name();
      for (const auto& a : args()) s += " " + a.to_string();
      return s + ")";
    }
  }
  return "?";
}

bool operator==(const Program& a, const Program& b) {
  const ProgramNode* x = a.get();
  const ProgramNode* y = b.get();
  if (x == y) return true;
  if (!x || !y) return false;
  if (x->hash != y->hash || x->kind != y->kind || x->size != y->size) return false;
  switch (x->kind) {
    case NodeKind::Variable: return x->var == y->var;
    case NodeKind::Constant: return x->constant->value == y->constant->value && x->constant->type == y->constant->type;
    case NodeKind::Apply:
      if (x->prim != y->prim && x->prim->label != y->prim->label) return false;
      if (x->args.size() != y->args.size()) return false;
      for (std::size_t i = 0; i < x->args.size(); ++i) {
        if (x->args[i] != y->args[i]) return false;
      }
      return true;
  }
  return false;
}

void append_node_token(const Program& p, std::string& out) {
  out.push_back(static_cast<char>(p.kind()));
  switch (p.kind()) {
    case NodeKind::Variable: {
      std::uint32_t v = p.var_index();
      for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
      break;
    }
    case NodeKind::Apply:
      out += p.primitive().label;
      out.push_back('\0');
      break;
    case NodeKind::Constant:
      p.value().encode(out);
      out += p.constant_type().to_string();
      out.push_back('\0');
      break;
  }
}

namespace {

void append_key(const Program& p, std::string& out) {
  append_node_token(p, out);
  for (const auto& a : p.args()) append_key(a, out);
}

}  // namespace

std::string canonical_key(const Program& p) {
  std::string out;
  append_key(p, out);
  return out;
}

int compare_programs(const Program& a, const Program& b) {
  if (a.get() == b.get()) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  switch (a.kind()) {
    case NodeKind::Variable:
      if (a.var_index() == b.var_index()) return 0;
      return a.var_index() < b.var_index() ? -1 : 1;
    case NodeKind::Constant: {
      std::string ta, tb;
      append_node_token(a, ta);
      append_node_token(b, tb);
      int c = ta.compare(tb);
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case NodeKind::Apply: {
      if (&a.primitive() != &b.primitive()) {
        int c = a.primitive().label.compare(b.primitive().label);
        if (c != 0) return c < 0 ? -1 : 1;
      }
      auto xs = a.args();
      auto ys = b.args();
      for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) {
        int c = compare_programs(xs[i], ys[i]);
        if (c != 0) return c;
      }
      if (xs.size() == ys.size()) return 0;
      return xs.size() < ys.size() ? -1 : 1;
    }
  }
  return 0;
}

}  // namespace dbs
