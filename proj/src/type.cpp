#include "dbs/type.hpp"

#include <algorithm>
#include <cctype>

namespace dbs {

Type Type::integer() { return Type{}; }

Type Type::boolean() {
  Type t;
  t.kind_ = TypeKind::Bool;
  return t;
}

Type Type::list(Type elem) {
  Type t;
  t.kind_ = TypeKind::List;
  t.children_.push_back(std::move(elem));
  return t;
}

Type Type::arrow(Type arg, Type result) {
  Type t;
  t.kind_ = TypeKind::Arrow;
  t.children_.push_back(std::move(arg));
  t.children_.push_back(std::move(result));
  return t;
}

Type Type::var(int index) {
  Type t;
  t.kind_ = TypeKind::Var;
  t.var_ = index;
  return t;
}

Type Type::function(const std::vector<Type>& args, Type result) {
  Type t = std::move(result);
  for (auto it = args.rbegin(); it != args.rend(); ++it) t = arrow(*it, std::move(t));
  return t;
}

const Type& Type::element() const {
  if (kind_ != TypeKind::List) throw TypeError("element() on non-list type " + to_string());
  return children_[0];
}

const Type& Type::arg() const {
  if (kind_ != TypeKind::Arrow) throw TypeError("arg() on non-arrow type " + to_string());
  return children_[0];
}

const Type& Type::result() const {
  if (kind_ != TypeKind::Arrow) throw TypeError("result() on non-arrow type " + to_string());
  return children_[1];
}

std::vector<Type> Type::arguments() const {
  std::vector<Type> out;
  const Type* t = this;
  while (t->is_arrow()) {
    out.push_back(t->children_[0]);
    t = &t->children_[1];
  }
  return out;
}

const Type& Type::final_result() const {
  const Type* t = this;
  while (t->is_arrow()) t = &t->children_[1];
  return *t;
}

std::size_t Type::arity() const {
  std::size_t n = 0;
  for (const Type* t = this; t->is_arrow(); t = &t->children_[1]) ++n;
  return n;
}

int Type::size() const {
  int n = 1;
  for (const auto& c : children_) n += c.size();
  return n;
}

bool Type::is_monomorphic() const { return max_var() < 0; }

int Type::max_var() const {
  int m = kind_ == TypeKind::Var ? var_ : -1;
  for (const auto& c : children_) m = std::max(m, c.max_var());
  return m;
}

std::string Type::to_string() const {
  switch (kind_) {
    case TypeKind::Int: return "int";
    case TypeKind::Bool: return "bool";
    case TypeKind::Var: return "t" + std::to_string(var_);
    case TypeKind::List: {
      const Type& e = children_[0];
      if (e.is_arrow()) return "(" + e.to_string() + ") list";
      return e.to_string() + " list";
    }
    case TypeKind::Arrow: {
      const Type& a = children_[0];
      std::string lhs = a.is_arrow() ? "(" + a.to_string() + ")" : a.to_string();
      return lhs + " -> " + children_[1].to_string();
    }
  }
  return "?";
}

bool operator==(const Type& a, const Type& b) {
  return a.kind_ == b.kind_ && a.var_ == b.var_ && a.children_ == b.children_;
}

namespace {

class TypeParser {
 public:
  explicit TypeParser(std::string_view s) : s_(s) {}

  Type parse() {
    Type t = parse_arrow();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return t;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& why) const {
    throw TypeError("cannot parse type '" + std::string(s_) + "': " + why);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(std::string_view tok) {
    skip_ws();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  Type parse_arrow() {
    Type lhs = parse_postfix();
    if (eat("->")) return Type::arrow(std::move(lhs), parse_arrow());
    return lhs;
  }

  Type parse_postfix() {
    Type t = parse_atom();
    while (true) {
      std::size_t save = pos_;
      if (ident() == "list") {
        t = Type::list(std::move(t));
      } else {
        pos_ = save;
        break;
      }
    }
    return t;
  }

  Type parse_atom() {
    if (eat("(")) {
      Type t = parse_arrow();
      if (!eat(")")) fail("expected ')'");
      return t;
    }
    std::string id = ident();
    if (id == "int") return Type::integer();
    if (id == "bool") return Type::boolean();
    if (id.size() > 1 && id[0] == 't' &&
        std::all_of(id.begin() + 1, id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return Type::var(std::stoi(id.substr(1)));
    }
    fail(id.empty() ? "expected a type" : "unknown type '" + id + "'");
  }
};

bool contains_var(const Type& t, int v) {
  switch (t.kind()) {
    case TypeKind::Var: return t.var_index() == v;
    case TypeKind::List: return contains_var(t.element(), v);
    case TypeKind::Arrow: return contains_var(t.arg(), v) || contains_var(t.result(), v);
    default: return false;
  }
}

}  // namespace

Type Type::parse(std::string_view text) { return TypeParser(text).parse(); }

Type substitute(const Substitution& subst, const Type& t) {
  switch (t.kind()) {
    case TypeKind::Var: {
      auto v = static_cast<std::size_t>(t.var_index());
      if (v < subst.size() && subst[v]) return substitute(subst, *subst[v]);
      return t;
    }
    case TypeKind::List: return Type::list(substitute(subst, t.element()));
    case TypeKind::Arrow: return Type::arrow(substitute(subst, t.arg()), substitute(subst, t.result()));
    default: return t;
  }
}

bool unify(const Type& a0, const Type& b0, Substitution& subst) {
  Type a = substitute(subst, a0);
  Type b = substitute(subst, b0);
  if (a.kind() == TypeKind::Var || b.kind() == TypeKind::Var) {
    if (a.kind() != TypeKind::Var) std::swap(a, b);
    if (b.kind() == TypeKind::Var && b.var_index() == a.var_index()) return true;
    if (contains_var(b, a.var_index())) return false;
    auto v = static_cast<std::size_t>(a.var_index());
    if (subst.size() <= v) subst.resize(v + 1);
    subst[v] = b;
    return true;
  }
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TypeKind::List: return unify(a.element(), b.element(), subst);
    case TypeKind::Arrow: return unify(a.arg(), b.arg(), subst) && unify(a.result(), b.result(), subst);
    default: return true;
  }
}

std::vector<Type> bounded_data_types(int max_size) {
  std::vector<Type> out;
  std::vector<Type> layer{Type::integer(), Type::boolean()};
  for (int size = 1; size <= max_size; ++size) {
    out.insert(out.end(), layer.begin(), layer.end());
    std::vector<Type> next;
    for (const auto& t : layer) next.push_back(Type::list(t));
    layer = std::move(next);
  }
  return out;
}

}  // namespace dbs
