#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <string_view>
#include <thread>
#include <vector>

#include "lava/error.hpp"

namespace lava {

enum class ClockMode { Virtual, Wall };

inline const char* to_string(ClockMode c) { return c == ClockMode::Virtual ? "virtual" : "wall"; }

inline std::optional<ClockMode> parse_clock(std::string_view s)
{
    if (s == "virtual") return ClockMode::Virtual;
    if (s == "wall") return ClockMode::Wall;
    return std::nullopt;
}

/// Discrete-event scheduler over virtual seconds. Events at equal times run
/// in the order they were scheduled, so runs are reproducible.
class Simulator {
public:
    using Action = std::function<void()>;

    double now() const noexcept { return now_; }

    void at(double time, Action action)
    {
        require(time >= now_, "cannot schedule an event in the past");
        queue_.push(Event{time, next_seq_++, std::move(action)});
    }

    void after(double delay, Action action) { at(now_ + delay, std::move(action)); }

    /// Runs until no events remain. Returns the number of events executed.
    std::size_t run()
    {
        std::size_t n = 0;
        while (!queue_.empty()) {
            Event e = queue_.top();
            queue_.pop();
            now_ = e.time;
            e.action();
            ++n;
        }
        return n;
    }

private:
    struct Event {
        double time;
        std::uint64_t seq;
        Action action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const noexcept
        {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    double now_ = 0.0;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

/// Bounded FIFO between two threads. pop() returns nullopt once the channel
/// is closed and drained.
template <typename T>
class Channel {
public:
    explicit Channel(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

    void push(T value)
    {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
        require(!closed_, "push on a closed channel");
        items_.push_back(std::move(value));
        not_empty_.notify_one();
    }

    std::optional<T> pop()
    {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) {
            return std::nullopt;
        }
        T v = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return v;
    }

    void close()
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    std::size_t capacity_;
    std::deque<T> items_;
    bool closed_ = false;
    std::mutex mutex_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
};

/// Real-time reference point for wall-clock runs.
class WallClock {
public:
    using clock = std::chrono::steady_clock;

    WallClock() : origin_(clock::now()) {}

    double now() const { return std::chrono::duration<double>(clock::now() - origin_).count(); }

    void sleep_until(double t) const
    {
        const auto target = origin_ + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(t));
        std::this_thread::sleep_until(target);
    }

private:
    clock::time_point origin_;
};

} // namespace lava
