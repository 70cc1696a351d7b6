#pragma once

// Brute-force scoring reference used to cross-check the engine. It works only
// on option indices and the answer key, never on stored records.

#include <cstdint>
#include <functional>
#include <vector>

namespace grila::testing {

inline int oracle_score(const std::vector<int>& chosen, const std::vector<int>& key)
{
    int score = 0;
    for (std::size_t q = 0; q < chosen.size() && q < key.size(); ++q) {
        if (chosen[q] == key[q])
            ++score;
    }
    return score;
}

/// Calls `fn` with every vector in {0..options-1}^questions, in odometer order.
inline void for_each_answer_vector(int questions, int options,
                                   const std::function<void(const std::vector<int>&)>& fn)
{
    std::vector<int> v(static_cast<std::size_t>(questions), 0);
    while (true) {
        fn(v);
        int i = questions - 1;
        while (i >= 0 && ++v[static_cast<std::size_t>(i)] == options) {
            v[static_cast<std::size_t>(i)] = 0;
            --i;
        }
        if (i < 0)
            return;
    }
}

} // namespace grila::testing
