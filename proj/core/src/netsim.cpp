#include "trustfield/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

#include "trustfield/csv.hpp"
#include "trustfield/errors.hpp"
#include "trustfield/rng.hpp"

namespace trustfield::netsim {

PolicyMap assign_policies(const trajdata::TrajectoryDataset& dataset, const SimConfig& config) {
    PolicyMap policies;
    if (dataset.traces.empty()) {
        return policies;
    }
    std::vector<int> ids;
    ids.reserve(dataset.traces.size());
    for (const auto& [id, trace] : dataset.traces) {
        ids.push_back(id);
    }
    const auto n_malicious = static_cast<std::size_t>(
        std::llround(config.malicious_fraction * static_cast<double>(ids.size())));

    Rng rng(derive_seed(config.seed, "policies"));
    rng.shuffle(ids);

    for (std::size_t k = 0; k < ids.size(); ++k) {
        NodePolicy policy;
        if (k < n_malicious) {
            policy.kind = NodePolicy::Kind::malicious;
            policy.drop_probability = kMaliciousDropProbability;
            policy.delay_low_s = kMaliciousDelayLowS;
            policy.delay_high_s = kMaliciousDelayHighS;
        } else {
            policy.kind = NodePolicy::Kind::honest;
            policy.drop_probability = 0.0;
            policy.delay_low_s = config.honest_delay_low_s;
            policy.delay_high_s = config.honest_delay_high_s;
        }
        policies[ids[k]] = policy;
    }
    return policies;
}

int window_count(const trajdata::TrajectoryDataset& dataset, const SimConfig& config) {
    if (config.window_s <= 0.0) {
        throw ConfigError("window_s must be positive");
    }
    return static_cast<int>(std::floor(dataset.duration_s / config.window_s + 1e-9));
}

namespace {

struct Delivery {
    double time_s;
    int hop;
    int sender;    // dense index
    int receiver;  // dense index

    bool operator>(const Delivery& other) const {
        return std::tie(time_s, hop, sender, receiver) >
               std::tie(other.time_s, other.hop, other.sender, other.receiver);
    }
};

}  // namespace

WindowResult run_window(const trajdata::TrajectoryDataset& dataset, const PolicyMap& policies,
                        int window_index, const SimConfig& config, bool record_events) {
    WindowResult result;
    const double window_start = window_index * config.window_s;
    const double midpoint = window_start + 0.5 * config.window_s;

    // Nodes active at the window midpoint, with positions frozen there.
    std::vector<int> node_ids;
    std::vector<double> positions;
    std::vector<const NodePolicy*> node_policies;
    for (const auto& [id, trace] : dataset.traces) {
        auto pos = trace.position_at(midpoint);
        if (!pos) {
            continue;
        }
        auto policy_it = policies.find(id);
        if (policy_it == policies.end()) {
            continue;
        }
        node_ids.push_back(id);
        positions.push_back(*pos);
        node_policies.push_back(&policy_it->second);
    }
    const int n = static_cast<int>(node_ids.size());
    if (n < 2) {
        return result;
    }

    // Neighbor lists via position-sorted two-pointer scan.
    std::vector<int> by_pos(n);
    for (int i = 0; i < n; ++i) by_pos[i] = i;
    std::sort(by_pos.begin(), by_pos.end(),
              [&](int a, int b) { return positions[a] < positions[b]; });
    std::vector<std::vector<int>> neighbors(n);
    {
        std::size_t lo = 0;
        for (std::size_t k = 0; k < by_pos.size(); ++k) {
            const double pos = positions[by_pos[k]];
            while (positions[by_pos[lo]] < pos - config.radio_range_ft) {
                ++lo;
            }
            for (std::size_t m = lo; m < by_pos.size(); ++m) {
                if (positions[by_pos[m]] > pos + config.radio_range_ft) {
                    break;
                }
                if (m != k) {
                    neighbors[by_pos[k]].push_back(by_pos[m]);
                }
            }
        }
    }

    Rng rng(derive_seed(config.seed, "window", static_cast<std::uint64_t>(window_index)));
    std::vector<std::uint32_t> seen(n, 0);
    std::uint32_t epoch = 0;
    std::vector<PacketEvent> events;
    std::priority_queue<Delivery, std::vector<Delivery>, std::greater<>> queue;

    for (int origin = 0; origin < n; ++origin) {
        ++epoch;
        seen[origin] = epoch;
        const std::int64_t packet_id =
            (static_cast<std::int64_t>(window_index) << 32) + node_ids[origin];
        for (int nb : neighbors[origin]) {
            queue.push({window_start, 1, origin, nb});
        }
        while (!queue.empty()) {
            const Delivery d = queue.top();
            queue.pop();
            if (seen[d.receiver] == epoch) {
                continue;  // duplicate: already accepted this packet
            }
            seen[d.receiver] = epoch;

            PacketEvent event;
            event.packet_id = packet_id;
            event.sender_id = node_ids[d.sender];
            event.receiver_id = node_ids[d.receiver];
            event.hop = d.hop;
            event.received_at_s = d.time_s;

            if (d.hop < config.max_hops) {
                const NodePolicy& policy = *node_policies[d.receiver];
                if (!rng.bernoulli(policy.drop_probability)) {
                    event.forwarded = true;
                    event.forward_delay_s = rng.uniform(policy.delay_low_s, policy.delay_high_s);
                    const double at = d.time_s + event.forward_delay_s;
                    for (int nb : neighbors[d.receiver]) {
                        if (seen[nb] != epoch) {
                            queue.push({at, d.hop + 1, d.receiver, nb});
                        }
                    }
                }
            }
            events.push_back(event);
        }
    }

    result.metrics = aggregate_window_metrics(events, window_index, config.max_hops);
    if (record_events) {
        result.events = std::move(events);
    }
    return result;
}

std::vector<WindowMetrics> aggregate_window_metrics(const std::vector<PacketEvent>& events,
                                                    int window_index, int max_hops) {
    struct Tally {
        int received = 0;
        int forwarded = 0;
        double pfd = 0.0;
        std::vector<int> observers;
    };
    std::map<int, Tally> tallies;
    for (const auto& event : events) {
        if (event.hop >= max_hops) {
            continue;  // terminal receipt, nothing to relay
        }
        Tally& tally = tallies[event.receiver_id];
        tally.received += 1;
        tally.observers.push_back(event.sender_id);
        if (event.forwarded) {
            tally.forwarded += 1;
            tally.pfd += 1.0 / event.forward_delay_s;
        }
    }

    std::vector<WindowMetrics> rows;
    for (auto& [subject, tally] : tallies) {
        std::sort(tally.observers.begin(), tally.observers.end());
        tally.observers.erase(std::unique(tally.observers.begin(), tally.observers.end()),
                              tally.observers.end());
        for (int observer : tally.observers) {
            WindowMetrics row;
            row.observer_id = observer;
            row.subject_id = subject;
            row.window_index = window_index;
            row.packets_received = tally.received;
            row.packets_forwarded = tally.forwarded;
            row.pfr = static_cast<double>(tally.forwarded) / static_cast<double>(tally.received);
            row.pfd = tally.pfd;
            rows.push_back(row);
        }
    }
    return rows;
}

void for_each_window(const trajdata::TrajectoryDataset& dataset, const PolicyMap& policies,
                     const SimConfig& config,
                     const std::function<void(int, const WindowResult&)>& on_window,
                     bool record_events) {
    const int windows = window_count(dataset, config);
    for (int w = 0; w < windows; ++w) {
        on_window(w, run_window(dataset, policies, w, config, record_events));
    }
}

std::vector<WindowMetrics> run_all_windows(const trajdata::TrajectoryDataset& dataset,
                                           const PolicyMap& policies, const SimConfig& config) {
    std::vector<WindowMetrics> all;
    for_each_window(dataset, policies, config,
                    [&](int, const WindowResult& result) {
                        all.insert(all.end(), result.metrics.begin(), result.metrics.end());
                    });
    return all;
}

MetricsLogWriter::MetricsLogWriter(const std::filesystem::path& path) : out_(path), path_(path) {
    if (!out_) {
        throw DataError("cannot open file for writing: " + path.string());
    }
    out_ << "window_index,observer_id,subject_id,packets_received,packets_forwarded,pfr,pfd\n";
}

void MetricsLogWriter::append(const std::vector<WindowMetrics>& rows) {
    for (const auto& row : rows) {
        out_ << row.window_index << ',' << row.observer_id << ',' << row.subject_id << ','
             << row.packets_received << ',' << row.packets_forwarded << ','
             << csv::format_double(row.pfr) << ',' << csv::format_double(row.pfd) << '\n';
    }
    if (!out_) {
        throw DataError("write failed: " + path_.string());
    }
}

EventLogWriter::EventLogWriter(const std::filesystem::path& path) : out_(path), path_(path) {
    if (!out_) {
        throw DataError("cannot open file for writing: " + path.string());
    }
    out_ << "window_index,packet_id,sender_id,receiver_id,hop,received_at_s,forwarded,"
            "forward_delay_s\n";
}

void EventLogWriter::append(int window_index, const std::vector<PacketEvent>& events) {
    for (const auto& event : events) {
        out_ << window_index << ',' << event.packet_id << ',' << event.sender_id << ','
             << event.receiver_id << ',' << event.hop << ','
             << csv::format_double(event.received_at_s) << ',' << (event.forwarded ? 1 : 0) << ',';
        if (event.forwarded) {
            out_ << csv::format_double(event.forward_delay_s);
        }
        out_ << '\n';
    }
    if (!out_) {
        throw DataError("write failed: " + path_.string());
    }
}

std::vector<WindowMetrics> read_metrics_csv(const std::filesystem::path& path) {
    const csv::Table table = csv::Table::load(path);
    const char* names[] = {"window_index", "observer_id",       "subject_id",
                           "packets_received", "packets_forwarded", "pfr",
                           "pfd"};
    std::size_t cols[7];
    for (int c = 0; c < 7; ++c) {
        auto col = table.column(names[c]);
        if (!col) {
            throw DataError(std::string("missing column ") + names[c] + " in " + path.string());
        }
        cols[c] = *col;
    }
    std::vector<WindowMetrics> rows;
    rows.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        auto cell_int = [&](std::size_t c) {
            auto v = csv::parse_int(table.row(r)[cols[c]]);
            if (!v) {
                throw DataError(std::string("non-numeric value in column ") + names[c] +
                                " at line " + std::to_string(table.line_number(r)) + " of " +
                                path.string());
            }
            return static_cast<int>(*v);
        };
        auto cell_double = [&](std::size_t c) {
            auto v = csv::parse_double(table.row(r)[cols[c]]);
            if (!v) {
                throw DataError(std::string("non-numeric value in column ") + names[c] +
                                " at line " + std::to_string(table.line_number(r)) + " of " +
                                path.string());
            }
            return *v;
        };
        WindowMetrics row;
        row.window_index = cell_int(0);
        row.observer_id = cell_int(1);
        row.subject_id = cell_int(2);
        row.packets_received = cell_int(3);
        row.packets_forwarded = cell_int(4);
        row.pfr = cell_double(5);
        row.pfd = cell_double(6);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace trustfield::netsim
