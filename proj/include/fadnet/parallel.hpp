#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

// Deterministic data parallelism: parallel_for splits an index range into
// contiguous chunks, and every index is processed by exactly one worker.
// Results must not depend on the worker count, so kernels built on it are
// bitwise reproducible for any FADNET_WORKERS setting.

namespace fadnet {

namespace detail {

class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  int workers() const { return workers_; }

  void set_workers(int n) {
    std::lock_guard<std::mutex> lk(api_mutex_);
    if (n < 1) n = 1;
    if (n == workers_) return;
    stop_threads();
    workers_ = n;
    start_threads();
  }

  // fn(begin, end) over [0, n) split into one chunk per worker. The calling
  // thread runs the first chunk itself.
  void run(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    std::lock_guard<std::mutex> lk(api_mutex_);
    const int chunks = static_cast<int>(std::min<std::int64_t>(workers_, n));
    if (chunks <= 1 || threads_.empty()) {
      fn(0, n);
      return;
    }
    const std::int64_t per = (n + chunks - 1) / chunks;
    {
      std::unique_lock<std::mutex> lk2(mutex_);
      job_ = &fn;
      job_n_ = n;
      job_per_ = per;
      job_chunks_ = chunks;
      next_chunk_ = 1;  // chunk 0 belongs to the caller
      pending_ = chunks - 1;
      ++generation_;
    }
    cv_.notify_all();
    fn(0, std::min<std::int64_t>(per, n));
    std::unique_lock<std::mutex> lk2(mutex_);
    done_cv_.wait(lk2, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  ThreadPool() {
    int n = default_workers();
    workers_ = n;
    start_threads();
  }

  ~ThreadPool() { stop_threads(); }

  static int default_workers() {
    if (const char* env = std::getenv("FADNET_WORKERS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }

  void start_threads() {
    stopping_ = false;
    for (int i = 0; i + 1 < workers_; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  void stop_threads() {
    {
      std::unique_lock<std::mutex> lk(mutex_);
      stopping_ = true;
      ++generation_;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::int64_t, std::int64_t)>* job = nullptr;
      {
        std::unique_lock<std::mutex> lk(mutex_);
        cv_.wait(lk, [&] { return stopping_ || (generation_ != seen && job_ != nullptr); });
        if (stopping_) return;
        seen = generation_;
        job = job_;
      }
      for (;;) {
        std::int64_t chunk;
        {
          std::unique_lock<std::mutex> lk(mutex_);
          if (job_ != job || next_chunk_ >= job_chunks_) break;
          chunk = next_chunk_++;
        }
        const std::int64_t begin = chunk * job_per_;
        const std::int64_t end = std::min<std::int64_t>(begin + job_per_, job_n_);
        if (begin < end) (*job)(begin, end);
        {
          std::unique_lock<std::mutex> lk(mutex_);
          if (--pending_ == 0) done_cv_.notify_all();
        }
      }
    }
  }

  std::mutex api_mutex_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::vector<std::thread> threads_;
  int workers_ = 1;
  bool stopping_ = false;
  const std::function<void(std::int64_t, std::int64_t)>* job_ = nullptr;
  std::int64_t job_n_ = 0;
  std::int64_t job_per_ = 0;
  std::int64_t job_chunks_ = 0;
  std::int64_t next_chunk_ = 0;
  std::int64_t pending_ = 0;
  std::uint64_t generation_ = 0;
};

// Serial below `min_work` multiply-adds per chunk; keeps tiny kernels off
// the pool.
inline std::int64_t row_grain(std::int64_t row_work) {
  constexpr std::int64_t min_work = 100000;
  return std::max<std::int64_t>(2, min_work / std::max<std::int64_t>(row_work, std::int64_t{1}));
}

}  // namespace detail

inline int worker_count() { return detail::ThreadPool::instance().workers(); }

inline void set_worker_count(int n) { detail::ThreadPool::instance().set_workers(n); }

// Runs body(begin, end) over disjoint chunks of [0, n). `grain` is a lower
// bound on n below which the loop stays on the calling thread.
template <typename Body>
void parallel_for(std::int64_t n, const Body& body, std::int64_t grain = 2) {
  if (n <= 0) return;
  if (worker_count() <= 1 || n < grain) {
    body(std::int64_t{0}, n);
    return;
  }
  std::function<void(std::int64_t, std::int64_t)> fn = body;
  detail::ThreadPool::instance().run(n, fn);
}

}  // namespace fadnet
