#include "dbs/runner.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "dbs/sample.hpp"

namespace dbs {

namespace {

struct NamedAlgorithm {
  Algorithm kind;
  const char* name;
};

constexpr NamedAlgorithm kNames[] = {
    {Algorithm::Heap, "heap"},           {Algorithm::AStar, "astar"}, {Algorithm::Threshold, "threshold"},
    {Algorithm::SortAdd, "sort-add"},    {Algorithm::Beam, "beam"},   {Algorithm::Bfs, "bfs"},
    {Algorithm::Dfs, "dfs"},             {Algorithm::SqrtSample, "sqrt-sample"},
    {Algorithm::NaiveSample, "naive-sample"},
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// 1, 2, 5, 10, 20, 50, ...
std::uint64_t next_checkpoint(std::uint64_t c) {
  std::uint64_t decade = 1;
  while (decade * 10 <= c) decade *= 10;
  const std::uint64_t lead = c / decade;
  return lead == 1 ? 2 * decade : lead == 2 ? 5 * decade : 10 * decade;
}

}  // namespace

std::string to_string(Algorithm a) {
  for (const auto& n : kNames) {
    if (n.kind == a) return n.name;
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (const auto& n : kNames) {
    if (name == n.name) return n.kind;
  }
  return std::nullopt;
}

bool is_sampler(Algorithm a) { return a == Algorithm::SqrtSample || a == Algorithm::NaiveSample; }

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = [] {
    std::vector<Algorithm> v;
    for (const auto& n : kNames) v.push_back(n.kind);
    return v;
  }();
  return all;
}

std::unique_ptr<ProgramStream> make_stream(const Pcfg& pcfg, const AlgorithmSpec& spec, std::uint64_t worker) {
  switch (spec.kind) {
    case Algorithm::Heap: return std::make_unique<HeapSearch>(pcfg);
    case Algorithm::AStar: return std::make_unique<AStar>(pcfg);
    case Algorithm::Threshold: return std::make_unique<ThresholdSearch>(pcfg, spec.threshold);
    case Algorithm::SortAdd: return std::make_unique<SortAndAdd>(pcfg, spec.sort_add);
    case Algorithm::Beam: return std::make_unique<BeamSearch>(pcfg, spec.beam);
    case Algorithm::Bfs: return std::make_unique<Bfs>(pcfg);
    case Algorithm::Dfs: return std::make_unique<Dfs>(pcfg, spec.dfs_size_bound);
    case Algorithm::SqrtSample: return std::make_unique<SamplingStream>(sqrt_transform(pcfg), pcfg, spec.seed, worker);
    case Algorithm::NaiveSample: return std::make_unique<SamplingStream>(pcfg, pcfg, spec.seed, worker);
  }
  throw std::invalid_argument("unknown algorithm");
}

namespace {

struct Message {
  enum class Kind { Progress, Done } kind = Kind::Progress;
  std::size_t worker = 0;
  CurvePoint totals;
  /// Naive mode: programs first seen by this worker since its last message.
  std::vector<std::pair<Program, double>> fresh;
  WorkerReport report;
};

class Channel {
 public:
  void send(Message m) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(m));
    }
    cv_.notify_one();
  }
  Message receive() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !queue_.empty(); });
    Message m = std::move(queue_.front());
    queue_.pop_front();
    return m;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Message> queue_;
};

struct WorkItem {
  Pcfg pcfg;
  double mass;
};

void run_worker(std::size_t w, const WorkItem& item, const AlgorithmSpec& spec, const PredicateFactory& factory,
                const SearchBudget& budget, const RunOptions& opt, bool naive, std::atomic<bool>& stop,
                std::atomic<int>& winner, Clock::time_point t0, Channel& channel) {
  WorkerReport rep;
  rep.worker = w;
  std::vector<std::pair<Program, double>> fresh;
  try {
    auto stream = make_stream(item.pcfg, spec, w);
    Predicate pred = factory ? factory(w) : Predicate{};
    const bool sampler = is_sampler(spec.kind);
    const bool ordered = spec.kind == Algorithm::Heap || spec.kind == Algorithm::AStar;
    std::unordered_set<Program, ProgramHash> seen;
    double last_send = 0.0;
    double last_probability = 2.0;
    std::uint64_t checkpoint = 1;
    while (!stop.load(std::memory_order_relaxed)) {
      if (budget.max_programs && rep.generated >= *budget.max_programs) break;
      const double now = seconds_since(t0);
      if (budget.wall_time && now >= *budget.wall_time) break;
      if (now - last_send >= opt.cadence_seconds) {
        last_send = now;
        Message m;
        m.worker = w;
        m.totals = CurvePoint{now, rep.generated, rep.distinct, rep.cumulative_probability};
        m.fresh = std::move(fresh);
        fresh.clear();
        channel.send(std::move(m));
      }
      auto e = stream->next();
      if (!e) {
        rep.exhausted = true;
        break;
      }
      ++rep.generated;
      const double p = e->probability * item.mass;
      if (opt.tie_check && !sampler) {
        if (!seen.insert(e->program).second) throw std::logic_error("tie-check: repeated " + e->program.to_string());
        if (ordered && e->probability > last_probability * (1.0 + 1e-9)) {
          throw std::logic_error("tie-check: probability increased at " + e->program.to_string());
        }
        last_probability = e->probability;
      }
      if (!sampler || seen.insert(e->program).second) {
        ++rep.distinct;
        rep.cumulative_probability += p;
        if (naive) fresh.emplace_back(e->program, p);
      }
      if (rep.generated == checkpoint) {
        rep.checkpoints.push_back(CurvePoint{seconds_since(t0), rep.generated, rep.distinct, rep.cumulative_probability});
        checkpoint = next_checkpoint(checkpoint);
      }
      if (opt.record_programs) rep.programs.push_back(e->program);
      if (pred && pred(e->program)) {
        rep.solution = e->program;
        rep.solution_probability = p;
        int none = -1;
        winner.compare_exchange_strong(none, static_cast<int>(w));
        if (budget.stop_on_success) {
          stop.store(true, std::memory_order_relaxed);
          break;
        }
      }
    }
  } catch (...) {
    stop.store(true);
    rep.seconds = seconds_since(t0);
    Message m;
    m.kind = Message::Kind::Done;
    m.worker = w;
    m.report = std::move(rep);
    m.report.exhausted = false;
    channel.send(std::move(m));
    throw;
  }
  rep.seconds = seconds_since(t0);
  if (rep.checkpoints.empty() || rep.checkpoints.back().generated != rep.generated) {
    rep.checkpoints.push_back(CurvePoint{rep.seconds, rep.generated, rep.distinct, rep.cumulative_probability});
  }
  Message m;
  m.kind = Message::Kind::Done;
  m.worker = w;
  m.totals = CurvePoint{rep.seconds, rep.generated, rep.distinct, rep.cumulative_probability};
  m.fresh = std::move(fresh);
  m.report = std::move(rep);
  channel.send(std::move(m));
}

}  // namespace

RunReport run_parallel(const Pcfg& pcfg, const AlgorithmSpec& spec, std::size_t k, const PredicateFactory& predicate,
                       const SearchBudget& budget, const RunOptions& opt) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  RunReport report;
  const bool naive = opt.naive_parallel || spec.kind == Algorithm::NaiveSample;

  std::vector<WorkItem> items;
  const auto split_start = Clock::now();
  if (k == 1 || naive) {
    items.assign(k, WorkItem{pcfg, 1.0});
  } else {
    Partition part = split_grammar(pcfg, k, opt.split);
    report.partition_quality = part.quality;
    for (const Split& s : part.splits) {
      SubSpace sub = sub_space(pcfg, s);
      items.push_back(WorkItem{std::move(sub.pcfg), sub.mass});
    }
  }
  report.split_seconds = seconds_since(split_start);

  Channel channel;
  std::atomic<bool> stop{false};
  std::atomic<int> winner{-1};
  std::vector<std::exception_ptr> errors(k);
  const auto t0 = Clock::now();
  std::vector<std::thread> threads;
  threads.reserve(k);
  for (std::size_t w = 0; w < k; ++w) {
    threads.emplace_back([&, w] {
      try {
        run_worker(w, items[w], spec, predicate, budget, opt, naive, stop, winner, t0, channel);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }

  // The aggregator owns every tally.
  std::vector<CurvePoint> latest(k);
  std::unordered_set<Program, ProgramHash> global;
  std::uint64_t global_distinct = 0;
  double global_mass = 0.0;
  report.workers.resize(k);
  std::size_t running = k;
  while (running > 0) {
    Message m = channel.receive();
    latest[m.worker] = m.totals;
    if (naive) {
      for (auto& [p, q] : m.fresh) {
        if (global.insert(p).second) {
          ++global_distinct;
          global_mass += q;
        }
      }
    }
    CurvePoint total{seconds_since(t0), 0, 0, 0.0};
    for (const auto& c : latest) {
      total.generated += c.generated;
      total.distinct += c.distinct;
      total.cumulative_probability += c.cumulative_probability;
    }
    if (naive) {
      total.distinct = global_distinct;
      total.cumulative_probability = global_mass;
    }
    report.curve.push_back(total);
    if (m.kind == Message::Kind::Done) {
      --running;
      report.workers[m.worker] = std::move(m.report);
    }
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  report.search_seconds = seconds_since(t0);
  if (winner.load() >= 0) {
    report.solved_by = static_cast<std::size_t>(winner.load());
    report.solution = report.workers[*report.solved_by].solution;
  }
  const CurvePoint& last = report.curve.back();
  report.generated = last.generated;
  report.distinct = last.distinct;
  report.cumulative_probability = last.cumulative_probability;
  return report;
}

}  // namespace dbs
