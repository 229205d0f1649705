#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "means_table.hpp"

namespace mumab {

// Position -> channel map: the first k(1) positions belong to channel 1, the
// next k(2) to channel 2, and so on.
inline std::vector<ChannelId> flatten_positions(const Configuration& k)
{
    std::vector<ChannelId> positions;
    positions.reserve(static_cast<std::size_t>(k.users()));
    for (ChannelId m = 1; m <= k.channels(); ++m) {
        if (k.count(m) < 0)
            throw UsageError("negative occupancy on channel " + std::to_string(m));
        positions.insert(positions.end(), static_cast<std::size_t>(k.count(m)), m);
    }
    return positions;
}

// Round-robin rotation: every fairness_window slots each user advances one
// flattened position, so per-channel occupancy never changes.
inline int rotated_position(int id, std::int64_t alloc_slot, std::int64_t fairness_window, int users)
{
    const std::int64_t shift = alloc_slot / fairness_window;
    return static_cast<int>((static_cast<std::int64_t>(id - 1) + shift) % users);
}

// Channel held by user `id` at slot `alloc_slot` of an allocation phase.
inline ChannelId assigned_channel(const Configuration& k_hat, int id, std::int64_t alloc_slot,
                                  std::int64_t fairness_window, int users)
{
    if (k_hat.users() != users)
        throw UsageError("configuration " + k_hat.to_string() + " places " + std::to_string(k_hat.users())
                         + " users, expected " + std::to_string(users));
    if (id < 1 || id > users)
        throw UsageError("user id " + std::to_string(id) + " outside 1.." + std::to_string(users));
    if (fairness_window < 1)
        throw UsageError("fairness window must be at least one slot");
    if (alloc_slot < 0)
        throw UsageError("negative allocation slot");
    const auto positions = flatten_positions(k_hat);
    return positions[static_cast<std::size_t>(rotated_position(id, alloc_slot, fairness_window, users))];
}

} // namespace mumab
