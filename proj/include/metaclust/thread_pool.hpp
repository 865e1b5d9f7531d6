#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace metaclust {

/// Runs fn(worker, i) for i in [0, n) on `workers` threads. Indices are
/// handed out in chunks from a shared counter. The first exception thrown
/// by any call is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn, std::size_t chunk = 64) {
    if (workers <= 1 || n <= chunk) {
        for (std::size_t i = 0; i < n; ++i) fn(std::size_t{0}, i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&](std::size_t worker) {
        try {
            for (;;) {
                const std::size_t begin = next.fetch_add(chunk);
                if (begin >= n) return;
                const std::size_t end = std::min(n, begin + chunk);
                for (std::size_t i = begin; i < end; ++i) fn(worker, i);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(n);
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(body, w);
    body(0);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

/// A LIFO of work items shared by a fixed set of workers. A worker may push
/// follow-up items while processing; run() returns once the stack is empty
/// and no worker is busy.
template <typename Item>
class WorkStack {
public:
    explicit WorkStack(std::vector<Item> initial) : items_(std::move(initial)) {}

    void push(Item item) {
        {
            std::lock_guard lock(mutex_);
            items_.push_back(std::move(item));
        }
        cv_.notify_one();
    }

    /// fn(worker, item, *this)
    template <typename Fn>
    void run(std::size_t workers, Fn&& fn) {
        auto body = [&](std::size_t worker) {
            for (;;) {
                Item item;
                {
                    std::unique_lock lock(mutex_);
                    cv_.wait(lock, [&] { return !items_.empty() || busy_ == 0 || error_; });
                    if (error_ || items_.empty()) {
                        cv_.notify_all();
                        return;
                    }
                    item = std::move(items_.back());
                    items_.pop_back();
                    ++busy_;
                }
                try {
                    fn(worker, std::move(item), *this);
                } catch (...) {
                    std::lock_guard lock(mutex_);
                    if (!error_) error_ = std::current_exception();
                }
                {
                    std::lock_guard lock(mutex_);
                    --busy_;
                }
                cv_.notify_all();
            }
        };
        if (workers <= 1) {
            body(0);
        } else {
            std::vector<std::thread> threads;
            threads.reserve(workers - 1);
            for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(body, w);
            body(0);
            for (auto& t : threads) t.join();
        }
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::vector<Item> items_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t busy_ = 0;
    std::exception_ptr error_;
};

}  // namespace metaclust
