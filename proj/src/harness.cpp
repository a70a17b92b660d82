#include "dbs/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dbs/derivation.hpp"

namespace dbs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

Value value_from_json(const Json& j, const Type& t) {
  switch (t.kind()) {
    case TypeKind::Int: {
      if (!j.is_number_integer()) throw std::invalid_argument("expected an int, got " + j.dump());
      const auto x = j.get<std::int64_t>();
      if (x < kMinElement || x > kMaxElement) {
        throw std::invalid_argument("int " + std::to_string(x) + " outside [" + std::to_string(kMinElement) + ", " +
                                    std::to_string(kMaxElement) + "]");
      }
      return Value::integer(x);
    }
    case TypeKind::Bool:
      if (!j.is_boolean()) throw std::invalid_argument("expected a bool, got " + j.dump());
      return Value::boolean(j.get<bool>());
    case TypeKind::List: {
      if (!j.is_array()) throw std::invalid_argument("expected a list, got " + j.dump());
      if (j.size() > kMaxListLength) {
        throw std::invalid_argument("list longer than " + std::to_string(kMaxListLength) + ": " + j.dump());
      }
      Value::List items;
      for (const auto& e : j) items.push_back(value_from_json(e, t.element()));
      return Value::list(std::move(items));
    }
    case TypeKind::Arrow:
    case TypeKind::Var: break;
  }
  throw std::invalid_argument("examples must have data types, not " + t.to_string());
}

Json value_to_json(const Value& v) {
  if (v.is_int()) return v.as_int();
  if (v.is_bool()) return v.as_bool();
  if (v.is_list()) {
    Json out = Json::array();
    for (const Value& e : v.as_list()) out.push_back(value_to_json(e));
    return out;
  }
  throw std::invalid_argument("cannot serialize " + v.to_string());
}

Task task_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("a task must be a JSON object");
  Task t;
  if (!j.contains("name") || !j["name"].is_string()) throw std::invalid_argument("task without a string name");
  t.name = j["name"].get<std::string>();
  if (!j.contains("type_request") || !j["type_request"].is_string()) {
    throw std::invalid_argument(t.name + ": missing type_request");
  }
  t.type_request = Type::parse(j["type_request"].get<std::string>());
  if (!t.type_request.is_monomorphic()) throw std::invalid_argument(t.name + ": type_request must be monomorphic");
  const std::vector<Type> args = t.type_request.arguments();
  const Type& result = t.type_request.final_result();
  if (!j.contains("examples") || !j["examples"].is_array() || j["examples"].empty()) {
    throw std::invalid_argument(t.name + ": needs at least one example");
  }
  for (const auto& ex : j["examples"]) {
    if (!ex.is_object() || !ex.contains("inputs") || !ex["inputs"].is_array() || !ex.contains("output")) {
      throw std::invalid_argument(t.name + ": examples need inputs (array) and output");
    }
    if (ex["inputs"].size() != args.size()) {
      throw std::invalid_argument(t.name + ": example has " + std::to_string(ex["inputs"].size()) + " inputs, type has " +
                                  std::to_string(args.size()));
    }
    Example e;
    try {
      for (std::size_t i = 0; i < args.size(); ++i) e.inputs.push_back(value_from_json(ex["inputs"][i], args[i]));
      e.output = value_from_json(ex["output"], result);
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument(t.name + ": " + err.what());
    }
    e.env.assign(e.inputs.rbegin(), e.inputs.rend());
    t.examples.push_back(std::move(e));
  }
  if (j.contains("solution")) {
    if (!j["solution"].is_string()) throw std::invalid_argument(t.name + ": solution must be a string");
    t.solution = j["solution"].get<std::string>();
  }
  return t;
}

Json task_to_json(const Task& t) {
  Json examples = Json::array();
  for (const Example& e : t.examples) {
    Json inputs = Json::array();
    for (const Value& v : e.inputs) inputs.push_back(value_to_json(v));
    examples.push_back({{"inputs", inputs}, {"output", value_to_json(e.output)}});
  }
  Json out = {{"name", t.name}, {"type_request", t.type_request.to_string()}, {"examples", examples}};
  if (t.solution) out["solution"] = *t.solution;
  return out;
}

TaskFile load_tasks(const std::string& path) {
  const Json j = read_json_file(path);
  const Json* list = &j;
  if (j.is_object() && j.contains("tasks")) list = &j["tasks"];
  if (!list->is_array()) throw std::invalid_argument(path + ": expected an array of tasks");
  TaskFile out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const Json& entry = (*list)[i];
    try {
      out.tasks.push_back(task_from_json(entry));
    } catch (const std::exception& e) {
      std::string name = entry.is_object() && entry.contains("name") && entry["name"].is_string()
                             ? entry["name"].get<std::string>()
                             : "#" + std::to_string(i);
      out.errors.emplace_back(std::move(name), e.what());
    }
  }
  return out;
}

bool satisfies(const Task& task, const Program& p) {
  for (const Example& e : task.examples) {
    const Value v = evaluate(p, e.env);
    if (v.is_error() || v != e.output) return false;
  }
  return true;
}

PredicateFactory task_predicate(const Task& task, std::size_t max_cache_entries) {
  auto shared = std::make_shared<const Task>(task);
  return [shared, max_cache_entries](std::size_t) -> Predicate {
    auto cache = std::make_shared<EvalCache>();
    return [shared, cache, max_cache_entries](const Program& p) {
      if (cache->size() > max_cache_entries) cache->clear();
      for (std::size_t i = 0; i < shared->examples.size(); ++i) {
        const Example& e = shared->examples[i];
        const Value v = evaluate(p, e.env, i, *cache, false);
        if (v.is_error() || v != e.output) return false;
      }
      return true;
    };
  };
}

Pcfg make_pcfg(const Grammar& g, const PcfgSource& source) {
  switch (source.kind) {
    case PcfgSource::Kind::Uniform: return uniform(g);
    case PcfgSource::Kind::Random: return random_pcfg(g, source.alpha, source.seed);
    case PcfgSource::Kind::Weights: return attach_weights(g, source.labeling);
  }
  throw std::invalid_argument("unknown PCFG source");
}

Labeling concentrated_labeling(const Grammar& g, const Program& solution, double boost) {
  auto used = derivation_of(g, solution);
  if (!used) throw std::invalid_argument(solution.to_string() + " is not derivable in this grammar");
  std::vector<double> w(g.num_rules(), 1.0);
  for (int rid : *used) w[rid] = boost;
  Labeling out;
  for (int rid = 0; rid < static_cast<int>(g.num_rules()); ++rid) out.emplace(rule_key(g, rid), w[rid]);
  return out;
}

SolveReport solve(const Task& task, std::shared_ptr<const Dsl> dsl, const PcfgSource& source,
                  const SolveOptions& opt) {
  SolveReport rep;
  rep.task = task.name;
  rep.dsl = dsl;
  const auto t0 = Clock::now();
  const Grammar g = compile(std::move(dsl), task.type_request, opt.depth, opt.bigram);
  const Pcfg pcfg = make_pcfg(g, source);
  const double compile_seconds = seconds_since(t0);
  rep.run = run_parallel(pcfg, opt.algorithm, opt.k, task_predicate(task), opt.budget, opt.run);
  rep.init_seconds = compile_seconds + rep.run.split_seconds;
  rep.search_seconds = rep.run.search_seconds;
  rep.generated = rep.run.generated;
  rep.distinct = rep.run.distinct;
  rep.cumulative_probability = rep.run.cumulative_probability;
  rep.partition_quality = rep.run.partition_quality;
  if (rep.run.solution) {
    rep.solution = rep.run.solution;
    rep.verified = satisfies(task, *rep.solution);
    rep.solved = rep.verified;
  }
  return rep;
}

// ---------------------------------------------------------------- CSV

const char* const kMetricsHeader =
    "run_id,algorithm,k,seed,t_seconds,generated,distinct,cumulative_probability,solved,solution_text";

namespace {

std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Splits one CSV record; quoted fields may contain separators, quotes and newlines.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string cur;
  bool quoted = false;
  for (; c != EOF; c = in.get()) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          cur += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        cur += static_cast<char>(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cur += static_cast<char>(c);
    }
  }
  fields.push_back(std::move(cur));
  return true;
}

template <class T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string("bad ") + what + " field: '" + s + "'");
  }
  return v;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << "\n";
  for (const MetricsRow& r : rows) {
    out << quote(r.run_id) << ',' << quote(r.algorithm) << ',' << r.k << ',' << quote(r.seed) << ','
        << format_double(r.t_seconds) << ',' << r.generated << ',' << r.distinct << ','
        << format_double(r.cumulative_probability) << ',' << (r.solved ? 1 : 0) << ',' << quote(r.solution_text)
        << "\n";
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::vector<std::string> f;
  if (!read_record(in, f)) throw std::invalid_argument("empty metrics file");
  std::string header;
  for (std::size_t i = 0; i < f.size(); ++i) header += (i ? "," : "") + f[i];
  if (header != kMetricsHeader) throw std::invalid_argument("unexpected metrics header: " + header);
  std::vector<MetricsRow> rows;
  while (read_record(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 10) throw std::invalid_argument("metrics row with " + std::to_string(f.size()) + " fields");
    MetricsRow r;
    r.run_id = f[0];
    r.algorithm = f[1];
    r.k = parse_number<std::size_t>(f[2], "k");
    r.seed = f[3];
    r.t_seconds = parse_number<double>(f[4], "t_seconds");
    r.generated = parse_number<std::uint64_t>(f[5], "generated");
    r.distinct = parse_number<std::uint64_t>(f[6], "distinct");
    r.cumulative_probability = parse_number<double>(f[7], "cumulative_probability");
    if (f[8] != "0" && f[8] != "1") throw std::invalid_argument("bad solved field: '" + f[8] + "'");
    r.solved = f[8] == "1";
    r.solution_text = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_rates_csv(std::ostream& out, const std::vector<RateRow>& rows) {
  out << "algorithm,programs,search_seconds,programs_per_second\n";
  for (const RateRow& r : rows) {
    out << r.algorithm << ',' << r.programs << ',' << format_double(r.search_seconds) << ','
        << format_double(r.programs_per_second) << "\n";
  }
}

void write_solved_curve_csv(std::ostream& out, const std::vector<SolvedCurveRow>& rows) {
  out << "algorithm,budget_seconds,tasks_solved\n";
  for (const SolvedCurveRow& r : rows) {
    out << r.algorithm << ',' << format_double(r.budget_seconds) << ',' << r.tasks_solved << "\n";
  }
}

// ---------------------------------------------------------------- benches

std::vector<MetricsRow> bench_random(const BenchRandomConfig& cfg) {
  const Grammar g = compile(cfg.dsl, cfg.type_request, cfg.depth, cfg.bigram);
  std::vector<MetricsRow> rows;
  std::vector<std::vector<std::vector<MetricsRow>>> per_algorithm(cfg.algorithms.size());
  for (std::size_t i = 0; i < cfg.n_pcfgs; ++i) {
    const std::uint64_t seed = cfg.seed + i;
    const Pcfg pcfg = random_pcfg(g, cfg.alpha, seed);
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      AlgorithmSpec spec = cfg.algorithms[a];
      spec.seed = seed;
      const RunReport run = run_parallel(pcfg, spec, cfg.k, {}, cfg.budget, cfg.run);
      const std::vector<CurvePoint>& curve = cfg.k == 1 ? run.workers[0].checkpoints : run.curve;
      std::vector<MetricsRow> group;
      for (const CurvePoint& c : curve) {
        group.push_back(MetricsRow{"pcfg-" + std::to_string(i), to_string(spec.kind), cfg.k, std::to_string(seed),
                                   c.t_seconds, c.generated, c.distinct, c.cumulative_probability, false, ""});
      }
      rows.insert(rows.end(), group.begin(), group.end());
      per_algorithm[a].push_back(std::move(group));
    }
  }
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    const auto& runs = per_algorithm[a];
    if (runs.empty()) continue;
    std::size_t n = runs[0].size();
    for (const auto& r : runs) n = std::min(n, r.size());
    const std::string name = to_string(cfg.algorithms[a].kind);
    std::vector<MetricsRow> mean_rows, std_rows;
    for (std::size_t idx = 0; idx < n; ++idx) {
      double m[4] = {0, 0, 0, 0}, s[4] = {0, 0, 0, 0};
      for (const auto& r : runs) {
        const double x[4] = {r[idx].t_seconds, static_cast<double>(r[idx].generated),
                             static_cast<double>(r[idx].distinct), r[idx].cumulative_probability};
        for (int c = 0; c < 4; ++c) m[c] += x[c];
      }
      for (double& v : m) v /= static_cast<double>(runs.size());
      for (const auto& r : runs) {
        const double x[4] = {r[idx].t_seconds, static_cast<double>(r[idx].generated),
                             static_cast<double>(r[idx].distinct), r[idx].cumulative_probability};
        for (int c = 0; c < 4; ++c) s[c] += (x[c] - m[c]) * (x[c] - m[c]);
      }
      for (double& v : s) v = runs.size() > 1 ? std::sqrt(v / static_cast<double>(runs.size() - 1)) : 0.0;
      auto as_count = [](double v) { return static_cast<std::uint64_t>(std::llround(v)); };
      mean_rows.push_back(MetricsRow{"summary", name, cfg.k, "mean", m[0], as_count(m[1]), as_count(m[2]), m[3], false, ""});
      std_rows.push_back(MetricsRow{"summary", name, cfg.k, "stddev", s[0], as_count(s[1]), as_count(s[2]), s[3], false, ""});
    }
    rows.insert(rows.end(), mean_rows.begin(), mean_rows.end());
    rows.insert(rows.end(), std_rows.begin(), std_rows.end());
  }
  return rows;
}

BenchTasksResult bench_tasks(const TaskFile& tasks, const BenchTasksConfig& cfg) {
  BenchTasksResult out;
  std::map<std::string, std::pair<std::uint64_t, double>> totals;
  std::map<std::string, std::vector<double>> solve_times;
  for (const AlgorithmSpec& spec : cfg.algorithms) {
    totals[to_string(spec.kind)];
    solve_times[to_string(spec.kind)];
  }
  const std::string seed_text = cfg.source.kind == PcfgSource::Kind::Random ? std::to_string(cfg.source.seed) : "";
  for (const auto& [name, message] : tasks.errors) {
    for (const AlgorithmSpec& spec : cfg.algorithms) {
      out.rows.push_back(MetricsRow{name, to_string(spec.kind), cfg.solve.k, seed_text, 0.0, 0, 0, 0.0, false,
                                    "error: " + message});
    }
  }
  for (const Task& task : tasks.tasks) {
    for (const AlgorithmSpec& spec : cfg.algorithms) {
      const std::string algo = to_string(spec.kind);
      MetricsRow row{task.name, algo, cfg.solve.k, seed_text, 0.0, 0, 0, 0.0, false, ""};
      try {
        PcfgSource source = cfg.source;
        if (!cfg.weights_dir.empty()) {
          const auto path = std::filesystem::path(cfg.weights_dir) / (task.name + ".json");
          source = PcfgSource::weights(labeling_from_json(read_json_file(path.string())));
        }
        SolveOptions opt = cfg.solve;
        opt.algorithm = spec;
        const SolveReport rep = solve(task, cfg.dsl, source, opt);
        row.t_seconds = rep.init_seconds + rep.search_seconds;
        row.generated = rep.generated;
        row.distinct = rep.distinct;
        row.cumulative_probability = rep.cumulative_probability;
        row.solved = rep.solved;
        if (rep.solution) row.solution_text = rep.solution->to_string();
        totals[algo].first += rep.generated;
        totals[algo].second += rep.search_seconds;
        if (rep.solved) solve_times[algo].push_back(row.t_seconds);
      } catch (const std::exception& e) {
        row.solution_text = std::string("error: ") + e.what();
      }
      out.rows.push_back(std::move(row));
    }
  }
  for (const AlgorithmSpec& spec : cfg.algorithms) {
    const std::string algo = to_string(spec.kind);
    if (std::any_of(out.rates.begin(), out.rates.end(), [&](const RateRow& r) { return r.algorithm == algo; })) continue;
    const auto [programs, seconds] = totals[algo];
    out.rates.push_back(RateRow{algo, programs, seconds, seconds > 0.0 ? static_cast<double>(programs) / seconds : 0.0});
    auto& times = solve_times[algo];
    std::sort(times.begin(), times.end());
    out.solved_curve.push_back(SolvedCurveRow{algo, 0.0, 0});
    for (std::size_t i = 0; i < times.size(); ++i) out.solved_curve.push_back(SolvedCurveRow{algo, times[i], i + 1});
  }
  return out;
}

}  // namespace dbs
