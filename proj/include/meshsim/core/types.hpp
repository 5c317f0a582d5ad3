#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

namespace meshsim {

/// Simulated time in integer microseconds.
class SimTime {
public:
    constexpr SimTime() = default;
    constexpr explicit SimTime(std::int64_t micros) : ticks_(micros) {}

    static constexpr SimTime micros(std::int64_t us) { return SimTime(us); }
    static constexpr SimTime millis(double ms) { return SimTime(static_cast<std::int64_t>(ms * 1e3 + (ms >= 0 ? 0.5 : -0.5))); }
    static constexpr SimTime seconds(double s) { return SimTime(static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))); }
    static constexpr SimTime max() { return SimTime(std::numeric_limits<std::int64_t>::max()); }

    constexpr std::int64_t ticks() const { return ticks_; }
    constexpr double to_seconds() const { return static_cast<double>(ticks_) * 1e-6; }
    constexpr double to_millis() const { return static_cast<double>(ticks_) * 1e-3; }

    constexpr SimTime& operator+=(SimTime o) { ticks_ += o.ticks_; return *this; }
    constexpr SimTime& operator-=(SimTime o) { ticks_ -= o.ticks_; return *this; }
    friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime(a.ticks_ + b.ticks_); }
    friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime(a.ticks_ - b.ticks_); }
    friend constexpr SimTime operator*(SimTime a, std::int64_t k) { return SimTime(a.ticks_ * k); }
    friend constexpr SimTime operator*(std::int64_t k, SimTime a) { return SimTime(a.ticks_ * k); }
    friend constexpr auto operator<=>(SimTime, SimTime) = default;

private:
    std::int64_t ticks_ = 0;
};

/// Node identifier; dense small integer index within a scenario.
class NodeId {
public:
    constexpr NodeId() = default;
    constexpr explicit NodeId(std::int32_t v) : value_(v) {}

    static constexpr NodeId broadcast() { return NodeId(-1); }
    static constexpr NodeId none() { return NodeId(-1); }

    constexpr std::int32_t value() const { return value_; }
    constexpr bool valid() const { return value_ >= 0; }
    constexpr std::size_t index() const { return static_cast<std::size_t>(value_); }

    friend constexpr auto operator<=>(NodeId, NodeId) = default;

private:
    std::int32_t value_ = -1;
};

inline std::string to_string(NodeId n) { return std::to_string(n.value()); }

}  // namespace meshsim

template <>
struct std::hash<meshsim::NodeId> {
    std::size_t operator()(meshsim::NodeId n) const noexcept { return std::hash<std::int32_t>{}(n.value()); }
};
