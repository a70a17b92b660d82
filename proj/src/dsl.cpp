#include "dbs/dsl.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace dbs {

Value call_function(const Value& f, std::span<const Value> args) {
  if (!f.is_function()) return Value::error(ErrorCode::NotAFunction);
  const Primitive* atom = f.as_function();
  if (args.size() != atom->signature.arity()) return Value::error(ErrorCode::TypeMismatch);
  for (const auto& a : args) {
    if (a.is_error()) return a;
  }
  return atom->semantics(args);
}

Dsl::Dsl(std::string name, int max_type_size) : name_(std::move(name)), max_type_size_(max_type_size) {}

const Primitive& Dsl::add(std::string name, std::string_view signature, Semantics fn) {
  if (find(name)) throw std::invalid_argument("duplicate primitive " + name);
  auto p = std::make_unique<Primitive>();
  p->name = std::move(name);
  p->signature = Type::parse(signature);
  p->arity = p->signature.arity();
  p->kind = PrimitiveKind::Function;
  p->semantics = std::move(fn);
  primitives_.push_back(std::move(p));
  return *primitives_.back();
}

const Primitive& Dsl::add_lambda_atom(std::string name, std::string_view type, Semantics fn) {
  if (find(name)) throw std::invalid_argument("duplicate primitive " + name);
  auto p = std::make_unique<Primitive>();
  p->name = std::move(name);
  p->signature = Type::parse(type);
  if (!p->signature.is_arrow() || !p->signature.is_monomorphic()) {
    throw std::invalid_argument("lambda atom " + p->name + " needs a monomorphic arrow type");
  }
  p->arity = 0;
  p->kind = PrimitiveKind::LambdaAtom;
  p->semantics = std::move(fn);
  primitives_.push_back(std::move(p));
  return *primitives_.back();
}

const Primitive* Dsl::find(std::string_view name) const {
  for (const auto& p : primitives_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const PrimitiveInstance& Dsl::instantiate(const Primitive& p, const Substitution& subst) const {
  Type mono = substitute(subst, p.signature);
  if (!mono.is_monomorphic()) {
    throw TypeError("instantiation of " + p.name + " leaves type variables: " + mono.to_string());
  }
  std::string label = p.name;
  if (!p.signature.is_monomorphic()) {
    label += "[";
    for (int v = 0; v <= p.signature.max_var(); ++v) {
      if (v) label += ",";
      label += substitute(subst, Type::var(v)).to_string();
    }
    label += "]";
  }
  std::lock_guard lock(mutex_);
  auto it = instances_.find(label);
  if (it != instances_.end()) return *it->second;
  auto inst = std::make_unique<PrimitiveInstance>();
  inst->base = &p;
  inst->type = mono;
  if (p.kind == PrimitiveKind::LambdaAtom) {
    inst->return_type = mono;
  } else {
    inst->arg_types = mono.arguments();
    inst->return_type = mono.final_result();
  }
  inst->label = label;
  inst->label_hash = std::hash<std::string>{}(label);
  auto& ref = *inst;
  instances_.emplace(label, std::move(inst));
  return ref;
}

const PrimitiveInstance& Dsl::instantiate(std::string_view name, const Substitution& subst) const {
  const Primitive* p = find(name);
  if (!p) throw std::invalid_argument("unknown primitive " + std::string(name));
  return instantiate(*p, subst);
}

namespace {

using Args = std::span<const Value>;
using List = Value::List;

Value checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) return Value::error(ErrorCode::Overflow);
  return Value::integer(r);
}

Value checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) return Value::error(ErrorCode::Overflow);
  return Value::integer(r);
}

std::size_t clamp_count(std::int64_t n, std::size_t len) {
  if (n <= 0) return 0;
  return std::min(static_cast<std::size_t>(n), len);
}

}  // namespace

namespace {

std::shared_ptr<const Dsl> build_list_mini() {
  auto dsl = std::make_shared<Dsl>("list-mini");

  dsl->add("head", "t0 list -> t0", [](Args a) {
    const auto& l = a[0].as_list();
    return l.empty() ? Value::error(ErrorCode::EmptyList) : l.front();
  });
  dsl->add("tail", "t0 list -> t0 list", [](Args a) {
    const auto& l = a[0].as_list();
    if (l.empty()) return Value::error(ErrorCode::EmptyList);
    return Value::list(List(l.begin() + 1, l.end()));
  });
  dsl->add("cons", "t0 -> t0 list -> t0 list", [](Args a) {
    const auto& l = a[1].as_list();
    List out;
    out.reserve(l.size() + 1);
    out.push_back(a[0]);
    out.insert(out.end(), l.begin(), l.end());
    return Value::list(std::move(out));
  });
  dsl->add("append", "t0 list -> t0 list -> t0 list", [](Args a) {
    List out = a[0].as_list();
    const auto& r = a[1].as_list();
    out.insert(out.end(), r.begin(), r.end());
    return Value::list(std::move(out));
  });
  dsl->add("rev", "t0 list -> t0 list", [](Args a) {
    const auto& l = a[0].as_list();
    return Value::list(List(l.rbegin(), l.rend()));
  });
  dsl->add("sort", "int list -> int list", [](Args a) {
    List out = a[0].as_list();
    std::stable_sort(out.begin(), out.end(), [](const Value& x, const Value& y) { return x.as_int() < y.as_int(); });
    return Value::list(std::move(out));
  });
  dsl->add("take", "int -> t0 list -> t0 list", [](Args a) {
    const auto& l = a[1].as_list();
    auto n = clamp_count(a[0].as_int(), l.size());
    return Value::list(List(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(n)));
  });
  dsl->add("drop", "int -> t0 list -> t0 list", [](Args a) {
    const auto& l = a[1].as_list();
    auto n = clamp_count(a[0].as_int(), l.size());
    return Value::list(List(l.begin() + static_cast<std::ptrdiff_t>(n), l.end()));
  });
  dsl->add("sum", "int list -> int", [](Args a) {
    std::int64_t s = 0;
    for (const auto& x : a[0].as_list()) {
      if (__builtin_add_overflow(s, x.as_int(), &s)) return Value::error(ErrorCode::Overflow);
    }
    return Value::integer(s);
  });
  dsl->add("length", "t0 list -> int",
           [](Args a) { return Value::integer(static_cast<std::int64_t>(a[0].as_list().size())); });
  dsl->add("map", "(t0 -> t1) -> t0 list -> t1 list", [](Args a) {
    const auto& l = a[1].as_list();
    List out;
    out.reserve(l.size());
    for (const auto& x : l) {
      Value y = call_function(a[0], std::span(&x, 1));
      if (y.is_error()) return y;
      out.push_back(std::move(y));
    }
    return Value::list(std::move(out));
  });
  dsl->add("filter", "(t0 -> bool) -> t0 list -> t0 list", [](Args a) {
    List out;
    for (const auto& x : a[1].as_list()) {
      Value keep = call_function(a[0], std::span(&x, 1));
      if (keep.is_error()) return keep;
      if (keep.as_bool()) out.push_back(x);
    }
    return Value::list(std::move(out));
  });
  dsl->add("zipwith", "(t0 -> t1 -> t2) -> t0 list -> t1 list -> t2 list", [](Args a) {
    const auto& l = a[1].as_list();
    const auto& r = a[2].as_list();
    List out;
    std::size_t n = std::min(l.size(), r.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Value pair[2] = {l[i], r[i]};
      Value y = call_function(a[0], pair);
      if (y.is_error()) return y;
      out.push_back(std::move(y));
    }
    return Value::list(std::move(out));
  });
  // Right fold: fold f z [a, b] = f a (f b z).
  dsl->add("fold", "(t0 -> t1 -> t1) -> t1 -> t0 list -> t1", [](Args a) {
    Value acc = a[1];
    const auto& l = a[2].as_list();
    for (auto it = l.rbegin(); it != l.rend(); ++it) {
      const Value pair[2] = {*it, acc};
      acc = call_function(a[0], pair);
      if (acc.is_error()) return acc;
    }
    return acc;
  });

  for (std::int64_t c : {-1, 0, 1, 2}) {
    dsl->add(std::to_string(c), "int", [c](Args) { return Value::integer(c); });
  }

  dsl->add_lambda_atom("+1", "int -> int", [](Args a) { return checked_add(a[0].as_int(), 1); });
  dsl->add_lambda_atom("*2", "int -> int", [](Args a) { return checked_mul(a[0].as_int(), 2); });
  dsl->add_lambda_atom(">0", "int -> bool", [](Args a) { return Value::boolean(a[0].as_int() > 0); });
  dsl->add_lambda_atom("<0", "int -> bool", [](Args a) { return Value::boolean(a[0].as_int() < 0); });
  dsl->add_lambda_atom("even", "int -> bool", [](Args a) { return Value::boolean(a[0].as_int() % 2 == 0); });
  dsl->add_lambda_atom("+", "int -> int -> int", [](Args a) { return checked_add(a[0].as_int(), a[1].as_int()); });
  dsl->add_lambda_atom("*", "int -> int -> int", [](Args a) { return checked_mul(a[0].as_int(), a[1].as_int()); });
  dsl->add_lambda_atom("max", "int -> int -> int",
                       [](Args a) { return Value::integer(std::max(a[0].as_int(), a[1].as_int())); });
  return dsl;
}

}  // namespace

std::shared_ptr<const Dsl> list_mini() {
  static const std::shared_ptr<const Dsl> instance = build_list_mini();
  return instance;
}

}  // namespace dbs
