#include "parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace stcae {

namespace {

int clamp_threads(int n) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (n <= 0) n = hw;
    return n > 256 ? 256 : n;
}

// Persistent pool; workers park on a condition variable between jobs. run()
// returns only after every chunk is done and every worker has left the job,
// so job state is never mutated while a worker can still observe it.
class Pool {
public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void set_threads(int n) {
        std::unique_lock<std::mutex> lk(mu_);
        target_ = clamp_threads(n);
        while (static_cast<int>(workers_.size()) < target_ - 1) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    int threads() {
        std::unique_lock<std::mutex> lk(mu_);
        return target_;
    }

    void run(std::int64_t n_chunks, std::int64_t grain, std::int64_t n,
             const std::function<void(std::int64_t, std::int64_t)>& body) {
        {
            std::unique_lock<std::mutex> lk(mu_);
            job_.body = &body;
            job_.grain = grain;
            job_.n = n;
            job_.chunks = n_chunks;
            job_.next.store(0, std::memory_order_relaxed);
            job_.pending.store(n_chunks, std::memory_order_relaxed);
            ++generation_;
        }
        cv_.notify_all();
        work();  // caller participates
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [&] {
            return active_ == 0 && job_.pending.load(std::memory_order_acquire) == 0;
        });
        job_.body = nullptr;
    }

private:
    struct Job {
        const std::function<void(std::int64_t, std::int64_t)>* body = nullptr;
        std::int64_t grain = 1;
        std::int64_t n = 0;
        std::int64_t chunks = 0;
        std::atomic<std::int64_t> next{0};
        std::atomic<std::int64_t> pending{0};
    };

    Pool() {
        std::unique_lock<std::mutex> lk(mu_);
        target_ = clamp_threads(0);
        while (static_cast<int>(workers_.size()) < target_ - 1) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    ~Pool() {
        {
            std::unique_lock<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                ++active_;
            }
            work();
            {
                std::unique_lock<std::mutex> lk(mu_);
                --active_;
            }
            done_cv_.notify_all();
        }
    }

    void work() {
        for (;;) {
            const std::int64_t c = job_.next.fetch_add(1, std::memory_order_relaxed);
            if (c >= job_.chunks) break;
            const std::int64_t begin = c * job_.grain;
            const std::int64_t end = begin + job_.grain < job_.n ? begin + job_.grain : job_.n;
            (*job_.body)(begin, end);
            job_.pending.fetch_sub(1, std::memory_order_acq_rel);
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> workers_;
    Job job_;
    std::uint64_t generation_ = 0;
    int active_ = 0;
    int target_ = 1;
    bool stop_ = false;
};

}  // namespace

void set_threads(int n) { Pool::instance().set_threads(n); }

int get_threads() { return Pool::instance().threads(); }

void parallel_chunks(std::int64_t n, std::int64_t grain,
                     const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (n <= 0) return;
    if (grain < 1) grain = 1;
    const std::int64_t n_chunks = (n + grain - 1) / grain;
    if (n_chunks == 1 || get_threads() == 1) {
        for (std::int64_t begin = 0; begin < n; begin += grain) {
            const std::int64_t end = begin + grain < n ? begin + grain : n;
            body(begin, end);
        }
        return;
    }
    Pool::instance().run(n_chunks, grain, n, body);
}

}  // namespace stcae
