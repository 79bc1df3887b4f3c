#pragma once

// Bitmask restatement of the temporal rules: bit i is frame i.

#include <vector>

#include "vcascade/temporal.hpp"

namespace tempo {

inline std::vector<vcascade::Label> labels_of(unsigned bits, int n) {
    std::vector<vcascade::Label> out;
    for (int i = 0; i < n; ++i) out.push_back(vcascade::label_of((bits >> i) & 1u));
    return out;
}

inline unsigned bits_of(const std::vector<vcascade::Label>& labels) {
    unsigned b = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (vcascade::is_positive(labels[i])) b |= 1u << i;
    }
    return b;
}

// Window of `window` frames centred on i, clipped to the track. A clipped
// window of one frame passes its label through; otherwise positives must
// be a strict majority of the frames present (for window 3: two or more).
inline unsigned majority(unsigned c, int n, int window) {
    const int h = window / 2;
    unsigned out = 0;
    for (int i = 0; i < n; ++i) {
        int present = 0;
        int votes = 0;
        for (int j = i - h; j <= i + h; ++j) {
            if (j < 0 || j >= n) continue;
            ++present;
            votes += (c >> j) & 1u;
        }
        const bool pos = present == 1 ? votes == 1 : 2 * votes > present;
        if (pos) out |= 1u << i;
    }
    return out;
}

inline unsigned validate(unsigned c, unsigned l, int n, int radius) {
    unsigned out = 0;
    for (int i = 0; i < n; ++i) {
        if (!((c >> i) & 1u)) continue;
        for (int j = i - radius; j <= i + radius; ++j) {
            if (j >= 0 && j < n && ((l >> j) & 1u)) {
                out |= 1u << i;
                break;
            }
        }
    }
    return out;
}

}  // namespace tempo
