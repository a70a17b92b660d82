#include "dbs/value.hpp"

#include <functional>

#include "dbs/dsl.hpp"

namespace dbs {

std::string to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyList: return "empty-list";
    case ErrorCode::Overflow: return "overflow";
    case ErrorCode::TypeMismatch: return "type-mismatch";
    case ErrorCode::UnboundVariable: return "unbound-variable";
    case ErrorCode::NotAFunction: return "not-a-function";
  }
  return "unknown";
}

Value Value::int_list(std::span<const std::int64_t> xs) {
  List items;
  items.reserve(xs.size());
  for (auto x : xs) items.push_back(integer(x));
  return list(std::move(items));
}

bool operator==(const Value& a, const Value& b) {
  if (a.v_.index() != b.v_.index()) return false;
  if (a.is_list()) {
    const auto& pa = std::get<Value::ListPtr>(a.v_);
    const auto& pb = std::get<Value::ListPtr>(b.v_);
    return pa == pb || *pa == *pb;
  }
  return a.v_ == b.v_;
}

std::size_t Value::hash() const {
  std::size_t h = v_.index() * 0x9e3779b97f4a7c15ULL;
  auto mix = [&h](std::size_t x) { h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ListPtr>) {
          mix(x->size());
          for (const auto& e : *x) mix(e.hash());
        } else if constexpr (std::is_same_v<T, Function>) {
          mix(std::hash<const void*>{}(x.atom));
        } else if constexpr (std::is_same_v<T, Error>) {
          mix(static_cast<std::size_t>(x.code));
        } else {
          mix(std::hash<T>{}(x));
        }
      },
      v_);
  return h;
}

std::string Value::to_string() const {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, ListPtr>) {
          std::string s = "[";
          for (std::size_t i = 0; i < x->size(); ++i) {
            if (i) s += ",";
            s += (*x)[i].to_string();
          }
          return s + "]";
        } else if constexpr (std::is_same_v<T, Function>) {
          return "<fn " + x.atom->name + ">";
        } else {
          return "error(" + dbs::to_string(x.code) + ")";
        }
      },
      v_);
}

void Value::encode(std::string& out) const {
  out.push_back(static_cast<char>(v_.index()));
  std::visit(
      [&out](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          // Big-endian with the sign bit flipped so bytes order like integers.
          auto u = static_cast<std::uint64_t>(x) ^ (std::uint64_t{1} << 63);
          for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((u >> shift) & 0xff));
        } else if constexpr (std::is_same_v<T, bool>) {
          out.push_back(x ? 1 : 0);
        } else if constexpr (std::is_same_v<T, ListPtr>) {
          auto n = static_cast<std::uint32_t>(x->size());
          for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((n >> shift) & 0xff));
          for (const auto& e : *x) e.encode(out);
        } else if constexpr (std::is_same_v<T, Function>) {
          out += x.atom->name;
          out.push_back('\0');
        } else {
          out.push_back(static_cast<char>(x.code));
        }
      },
      v_);
}

}  // namespace dbs
