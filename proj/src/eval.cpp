#include "dbs/eval.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>

namespace dbs {

TypeEnv environment_of(const Type& type_request) {
  auto args = type_request.arguments();
  return TypeEnv(args.rbegin(), args.rend());
}

Type infer_type(const Program& p, const TypeEnv& env) {
  switch (p.kind()) {
    case NodeKind::Variable:
      if (p.var_index() >= env.size()) throw TypeError("unbound variable " + p.to_string());
      return env[p.var_index()];
    case NodeKind::Constant: return p.constant_type();
    case NodeKind::Apply: {
      const auto& prim = p.primitive();
      if (p.args().size() != prim.arity()) {
        throw TypeError("arity mismatch at " + p.to_string() + ": " + prim.label + " takes " +
                        std::to_string(prim.arity()));
      }
      for (std::size_t i = 0; i < prim.arity(); ++i) {
        Type got = infer_type(p.args()[i], env);
        if (got != prim.arg_types[i]) {
          throw TypeError("argument " + std::to_string(i) + " of " + prim.label + " in " + p.to_string() +
                          " has type " + got.to_string() + ", expected " + prim.arg_types[i].to_string());
        }
      }
      return prim.return_type;
    }
  }
  throw TypeError("malformed program");
}

const Value* EvalCache::find(std::uint64_t inputs_id, const Program& p) const {
  auto it = map_.find(Key{inputs_id, p});
  if (it == map_.end()) {
    ++misses_;
    return nullptr;
  }
  ++hits_;
  return &it->second;
}

void EvalCache::insert(std::uint64_t inputs_id, const Program& p, Value v) {
  map_.insert_or_assign(Key{inputs_id, p}, std::move(v));
}

namespace {

template <class ArgEval>
Value eval_node(const Program& p, std::span<const Value> inputs, ArgEval&& eval_arg) {
  switch (p.kind()) {
    case NodeKind::Variable:
      if (p.var_index() >= inputs.size()) return Value::error(ErrorCode::UnboundVariable);
      return inputs[p.var_index()];
    case NodeKind::Constant: return p.value();
    case NodeKind::Apply: {
      const auto& prim = p.primitive();
      if (prim.is_lambda_atom()) return Value::function(prim.base);
      auto args = p.args();
      if (args.empty()) return prim.base->semantics({});
      Value buf[4];
      std::vector<Value> heap;
      std::span<Value> vals;
      if (args.size() <= 4) {
        vals = std::span<Value>(buf, args.size());
      } else {
        heap.resize(args.size());
        vals = heap;
      }
      for (std::size_t i = 0; i < args.size(); ++i) {
        vals[i] = eval_arg(args[i]);
        if (vals[i].is_error()) return vals[i];
      }
      return prim.base->semantics(vals);
    }
  }
  return Value::error(ErrorCode::TypeMismatch);
}

}  // namespace

Value evaluate(const Program& p, std::span<const Value> inputs) {
  return eval_node(p, inputs, [&](const Program& a) { return evaluate(a, inputs); });
}

Value evaluate(const Program& p, std::span<const Value> inputs, std::uint64_t inputs_id, EvalCache& cache,
               bool cache_root) {
  if (const Value* hit = cache.find(inputs_id, p)) return *hit;
  Value v = eval_node(p, inputs, [&](const Program& a) { return evaluate(a, inputs, inputs_id, cache, true); });
  if (cache_root) cache.insert(inputs_id, p, v);
  return v;
}

namespace {

struct SExpr {
  std::string atom;
  std::vector<SExpr> children;
  bool is_call = false;
};

class SExprParser {
 public:
  explicit SExprParser(std::string_view s) : s_(s) {}

  SExpr parse() {
    SExpr e = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("cannot parse program '" + std::string(s_) + "': " + why);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  SExpr parse_expr() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (s_[pos_] == '(') {
      ++pos_;
      SExpr e;
      e.is_call = true;
      e.atom = token();
      while (true) {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing ')'");
        if (s_[pos_] == ')') {
          ++pos_;
          break;
        }
        e.children.push_back(parse_expr());
      }
      return e;
    }
    if (s_[pos_] == '[') {
      std::size_t depth = 0, start = pos_;
      do {
        if (s_[pos_] == '[') ++depth;
        if (s_[pos_] == ']') --depth;
        ++pos_;
      } while (depth > 0 && pos_ < s_.size());
      if (depth) fail("unbalanced '['");
      return SExpr{std::string(s_.substr(start, pos_ - start)), {}, false};
    }
    return SExpr{token(), {}, false};
  }

  std::string token() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
           s_[pos_] != ')') {
      ++pos_;
    }
    if (start == pos_) fail("expected a token");
    return std::string(s_.substr(start, pos_ - start));
  }
};

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

Value parse_literal(std::string_view s) {
  if (s == "true") return Value::boolean(true);
  if (s == "false") return Value::boolean(false);
  if (auto i = parse_int(s)) return Value::integer(*i);
  if (!s.empty() && s.front() == '[' && s.back() == ']') {
    Value::List items;
    std::string_view body = s.substr(1, s.size() - 2);
    std::size_t depth = 0, start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i == body.size() || (body[i] == ',' && depth == 0)) {
        std::string_view piece = body.substr(start, i - start);
        while (!piece.empty() && std::isspace(static_cast<unsigned char>(piece.front()))) piece.remove_prefix(1);
        while (!piece.empty() && std::isspace(static_cast<unsigned char>(piece.back()))) piece.remove_suffix(1);
        if (!piece.empty()) items.push_back(parse_literal(piece));
        start = i + 1;
      } else if (body[i] == '[') {
        ++depth;
      } else if (body[i] == ']') {
        --depth;
      }
    }
    return Value::list(std::move(items));
  }
  throw std::invalid_argument("unknown symbol '" + std::string(s) + "'");
}

/// Inference over an s-expression with fresh type variables per occurrence.
class Inferencer {
 public:
  Inferencer(const Dsl& dsl, TypeEnv env) : dsl_(dsl), env_(std::move(env)) {}

  struct Node {
    const Primitive* prim = nullptr;
    int var_offset = 0;
    std::optional<std::uint32_t> variable;
    std::optional<Value> literal;
    Type type;
    std::vector<Node> children;
  };

  Node infer(const SExpr& e) {
    Node n;
    if (!e.is_call && e.atom.rfind("var", 0) == 0 && e.atom.size() > 3) {
      if (auto idx = parse_int(std::string_view(e.atom).substr(3))) {
        if (*idx < 0 || static_cast<std::size_t>(*idx) >= env_.size()) {
          throw TypeError("unbound variable " + e.atom);
        }
        n.variable = static_cast<std::uint32_t>(*idx);
        n.type = env_[*idx];
        return n;
      }
    }
    const Primitive* prim = dsl_.find(e.atom);
    if (!prim) {
      if (e.is_call) throw std::invalid_argument("unknown primitive " + e.atom);
      n.literal = parse_literal(e.atom);
      n.type = Program::constant(*n.literal).constant_type();
      return n;
    }
    n.prim = prim;
    n.var_offset = next_var_;
    next_var_ += prim->signature.max_var() + 1;
    Type sig = rename(prim->signature, n.var_offset);
    if (prim->kind == PrimitiveKind::LambdaAtom) {
      if (!e.children.empty()) throw TypeError("lambda atom " + prim->name + " takes no program arguments");
      n.type = sig;
      return n;
    }
    auto arg_types = sig.arguments();
    if (e.children.size() != arg_types.size()) {
      throw TypeError("arity mismatch: " + prim->name + " takes " + std::to_string(arg_types.size()) +
                      " arguments, got " + std::to_string(e.children.size()));
    }
    for (std::size_t i = 0; i < arg_types.size(); ++i) {
      Node c = infer(e.children[i]);
      if (!unify(c.type, arg_types[i], subst_)) {
        throw TypeError("argument " + std::to_string(i) + " of " + prim->name + " has type " +
                        substitute(subst_, c.type).to_string() + ", expected " + substitute(subst_, arg_types[i]).to_string());
      }
      n.children.push_back(std::move(c));
    }
    n.type = sig.final_result();
    return n;
  }

  void expect(const Node& n, const Type& t) {
    if (!unify(n.type, t, subst_)) {
      throw TypeError("program has type " + substitute(subst_, n.type).to_string() + ", expected " + t.to_string());
    }
  }

  Program build(const Node& n) {
    if (n.variable) return Program::variable(*n.variable);
    if (n.literal) return Program::constant(*n.literal);
    Substitution local;
    for (int v = 0; v <= n.prim->signature.max_var(); ++v) {
      Type t = substitute(subst_, Type::var(n.var_offset + v));
      // Unconstrained variables default to int.
      local.push_back(t.is_monomorphic() ? t : Type::integer());
    }
    std::vector<Program> args;
    for (const auto& c : n.children) args.push_back(build(c));
    return Program::apply(dsl_.instantiate(*n.prim, local), std::move(args));
  }

 private:
  const Dsl& dsl_;
  TypeEnv env_;
  Substitution subst_;
  int next_var_ = 0;

  static Type rename(const Type& t, int offset) {
    switch (t.kind()) {
      case TypeKind::Var: return Type::var(t.var_index() + offset);
      case TypeKind::List: return Type::list(rename(t.element(), offset));
      case TypeKind::Arrow: return Type::arrow(rename(t.arg(), offset), rename(t.result(), offset));
      default: return t;
    }
  }
};

}  // namespace

Program parse_program(const Dsl& dsl, std::string_view text, const Type& type_request) {
  SExpr e = SExprParser(text).parse();
  Inferencer inf(dsl, environment_of(type_request));
  auto node = inf.infer(e);
  inf.expect(node, type_request.final_result());
  return inf.build(node);
}

}  // namespace dbs
