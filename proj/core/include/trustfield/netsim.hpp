#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <vector>

#include "trustfield/trajdata.hpp"

namespace trustfield::netsim {

struct NodePolicy {
    enum class Kind { honest, malicious };
    Kind kind = Kind::honest;
    double drop_probability = 0.0;
    double delay_low_s = 0.001;  // forwarding delay bounds, uniform
    double delay_high_s = 0.020;
};

/// Attacker behavior: drops 90% of received packets and forwards the rest
/// with a 100-500 ms delay.
inline constexpr double kMaliciousDropProbability = 0.9;
inline constexpr double kMaliciousDelayLowS = 0.1;
inline constexpr double kMaliciousDelayHighS = 0.5;

struct SimConfig {
    double window_s = 1.0;       // sensing-window length
    double radio_range_ft = 300.0;
    int max_hops = 3;
    double malicious_fraction = 0.10;
    double honest_delay_low_s = 0.001;
    double honest_delay_high_s = 0.020;
    std::uint64_t seed = 1;
};

/// First acceptance of a packet by a node. Duplicate deliveries of a
/// packet_id a node has already accepted are suppressed and never logged.
struct PacketEvent {
    std::int64_t packet_id = 0;
    int sender_id = 0;
    int receiver_id = 0;
    int hop = 0;  // 1..max_hops
    double received_at_s = 0.0;
    bool forwarded = false;
    double forward_delay_s = 0.0;  // valid iff forwarded
};

/// Per-subject behavior counts for one sensing window, as seen by one
/// observer. packets_received counts relayable receipts only (hop <
/// max_hops); a receipt at the hop limit is correct terminal behavior and
/// does not enter the ratio.
struct WindowMetrics {
    int observer_id = 0;
    int subject_id = 0;
    int window_index = 0;
    int packets_received = 0;
    int packets_forwarded = 0;
    double pfr = 0.0;  // packets_forwarded / packets_received
    double pfd = 0.0;  // sum of 1/delay over forwarded packets [1/s]
};

using PolicyMap = std::map<int, NodePolicy>;

/// Marks round(malicious_fraction * n) vehicles malicious via a seeded
/// shuffle; everyone else is honest. Deterministic given config.seed.
PolicyMap assign_policies(const trajdata::TrajectoryDataset& dataset, const SimConfig& config);

int window_count(const trajdata::TrajectoryDataset& dataset, const SimConfig& config);

struct WindowResult {
    std::vector<WindowMetrics> metrics;  // sorted by (subject, observer)
    std::vector<PacketEvent> events;     // populated only when requested
};

/// Floods one message per active vehicle through the frozen window-midpoint
/// topology, up to max_hops, applying each node's drop/delay policy, and
/// aggregates the per-subject metrics. Deterministic given config.seed and
/// window_index.
WindowResult run_window(const trajdata::TrajectoryDataset& dataset, const PolicyMap& policies,
                        int window_index, const SimConfig& config, bool record_events = false);

/// Pure aggregation step from an event log; exposed so metrics can be
/// recomputed independently of the flood simulation.
std::vector<WindowMetrics> aggregate_window_metrics(const std::vector<PacketEvent>& events,
                                                    int window_index, int max_hops);

void for_each_window(const trajdata::TrajectoryDataset& dataset, const PolicyMap& policies,
                     const SimConfig& config,
                     const std::function<void(int, const WindowResult&)>& on_window,
                     bool record_events = false);

std::vector<WindowMetrics> run_all_windows(const trajdata::TrajectoryDataset& dataset,
                                           const PolicyMap& policies, const SimConfig& config);

/// Streaming CSV writers for the metrics and event logs.
class MetricsLogWriter {
public:
    MetricsLogWriter(const std::filesystem::path& path);
    void append(const std::vector<WindowMetrics>& rows);

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

class EventLogWriter {
public:
    EventLogWriter(const std::filesystem::path& path);
    void append(int window_index, const std::vector<PacketEvent>& events);

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

std::vector<WindowMetrics> read_metrics_csv(const std::filesystem::path& path);

}  // namespace trustfield::netsim
