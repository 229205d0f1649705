#pragma once

#include <charconv>
#include <ostream>
#include <span>
#include <string>

#include "engine.hpp"

namespace mumab {

// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Per-run trace: t,cumulative_regret,epoch,phase
inline void write_trace_csv(std::ostream& os, const RegretTrace& trace)
{
    os << "t,cumulative_regret,epoch,phase\n";
    for (const TracePoint& p : trace.points)
        os << p.t << ',' << format_double(p.regret) << ',' << p.epoch << ',' << to_string(p.phase) << '\n';
}

// Aggregated trace: t,mean,std
inline void write_aggregate_csv(std::ostream& os, std::span<const AggregatePoint> points)
{
    os << "t,mean,std\n";
    for (const AggregatePoint& p : points)
        os << p.t << ',' << format_double(p.mean) << ',' << format_double(p.std) << '\n';
}

// Full slot log, one row per active user per slot:
// t,user,channel,occupancy,reward,sample_channel,sample_occupancy
// channel 0 means idle; sample columns are 0 when no sample was recorded.
inline void write_slot_header(std::ostream& os)
{
    os << "t,user,channel,occupancy,reward,sample_channel,sample_occupancy\n";
}

inline void write_slot_rows(std::ostream& os, const SlotOutcome& s)
{
    for (std::size_t i = 0; i < s.users.size(); ++i) {
        const ChannelId m = s.actions[i].channel();
        const int occ = m > 0 ? s.occupancy[static_cast<std::size_t>(m - 1)] : 0;
        const auto& label = s.samples[i];
        os << s.t << ',' << s.users[i] << ',' << m << ',' << occ << ',' << format_double(s.rewards[i]) << ','
           << (label ? label->channel : 0) << ',' << (label ? label->occupancy : 0) << '\n';
    }
}

} // namespace mumab
