#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace veil {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void cat_one(std::ostringstream&) {}

template <class T, class... Rest>
void cat_one(std::ostringstream& os, T&& v, Rest&&... rest) {
    os << v;
    cat_one(os, std::forward<Rest>(rest)...);
}

} // namespace detail

template <class... Args>
std::string cat(Args&&... args) {
    std::ostringstream os;
    detail::cat_one(os, std::forward<Args>(args)...);
    return os.str();
}

template <class... Args>
[[noreturn]] void fail(Args&&... args) {
    throw Error(cat(std::forward<Args>(args)...));
}

template <class... Args>
void require(bool cond, Args&&... args) {
    if (!cond) fail(std::forward<Args>(args)...);
}

template <class T>
T clamp01(T v) {
    return std::min(T(1), std::max(T(0), v));
}

inline double sqr(double v) { return v * v; }

} // namespace veil
