#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "acisim/rng.hpp"

namespace acisim {

using Slot = std::int64_t;
/// Backlog and service are whole bits so conservation holds exactly.
using Bits = std::int64_t;

/// Packets that arrived in the same slot with the same size.
struct PacketBatch {
    Slot arrival_slot = 0;
    Bits size_bits = 0;
    std::int64_t count = 0;

    Bits total_bits() const { return size_bits * count; }
};

/// Poisson packet arrivals for one slot: count ~ Poisson(lambda * slot_len / packet_size).
PacketBatch sample_arrivals(double lambda_bps, double slot_len_s, Bits packet_size, Slot now, StreamRng& rng);

/// D = min(Q, mu) when eligible, else 0.
Bits service_amount(Bits backlog, Bits mu_slot, bool eligible);

/// Histogram of per-packet delays in whole slots. Exact order statistics
/// without keeping one entry per packet.
class DelayHistogram {
public:
    void record(Slot delay, std::int64_t count = 1);
    void merge(const DelayHistogram& other);

    std::int64_t count() const { return total_; }
    bool empty() const { return total_ == 0; }
    double mean() const;
    Slot max() const;
    /// Linear interpolation between order statistics (h = (n-1) q).
    double quantile(double q) const;
    /// Fraction of samples <= d.
    double cdf(Slot d) const;
    const std::vector<std::int64_t>& counts() const { return counts_; }

private:
    Slot order_statistic(std::int64_t k) const;

    std::vector<std::int64_t> counts_;
    std::int64_t total_ = 0;
    long double sum_ = 0;
};

/// Receives delay samples; packets that arrived before `min_arrival` are not recorded
/// (warm-up discard) but still depart normally.
struct DelaySink {
    DelayHistogram* histogram = nullptr;
    Slot min_arrival = 0;

    void record(Slot arrival, Slot departure, std::int64_t count) const {
        if (histogram != nullptr && arrival >= min_arrival) histogram->record(departure - arrival, count);
    }
};

class QueueState {
public:
    QueueState() = default;
    explicit QueueState(double arrival_rate_bps) : arrival_rate_(arrival_rate_bps) {}

    double arrival_rate() const { return arrival_rate_; }
    Bits backlog() const { return backlog_; }
    const std::deque<PacketBatch>& ledger() const { return ledger_; }
    /// Bits of the head packet already sent.
    Bits head_consumed() const { return head_consumed_; }

    Bits arrived_total() const { return arrived_total_; }
    Bits departed_total() const { return departed_total_; }
    std::int64_t packets_departed() const { return packets_departed_; }

    /// Q+ = (Q - D) + A. Departed bits consume the ledger head; a packet departs
    /// (and its delay is recorded) when its last bit leaves. Throws
    /// std::logic_error if departed exceeds the backlog.
    void advance(Bits departed, const PacketBatch& arrived, Slot now, const DelaySink& sink = {});

    /// now - arrival slot of the head packet; 0 when empty.
    Slot hol_age(Slot now) const;

private:
    double arrival_rate_ = 0.0;
    Bits backlog_ = 0;
    Bits head_consumed_ = 0;
    std::deque<PacketBatch> ledger_;
    Bits arrived_total_ = 0;
    Bits departed_total_ = 0;
    std::int64_t packets_departed_ = 0;
};

} // namespace acisim
