#pragma once

#include <cstddef>
#include <vector>

namespace toricflow {

// Fixed-order pairwise summation: deterministic and O(log n) error growth.
template <class T>
T pairwise_sum(const T* x, std::size_t n) {
    if (n <= 8) {
        T s = 0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

template <class T>
T pairwise_sum(const std::vector<T>& x) {
    return pairwise_sum(x.data(), x.size());
}

}  // namespace toricflow
