#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "urbanflow/model.hpp"
#include "urbanflow/scenario.hpp"

namespace testing {

inline std::filesystem::path fixture_dir() { return URBANFLOW_FIXTURE_DIR; }

/// Fresh scratch directory, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() /
                ("urbanflow_" + name + "_" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline urbanflow::Link link(urbanflow::LinkId id, urbanflow::NodeId from, urbanflow::NodeId to, double t0,
                            double capacity = 1e9, double alpha = 0.15, double beta = 4.0, double length = 1.0) {
    urbanflow::Link l;
    l.link_id = id;
    l.from_node = from;
    l.to_node = to;
    l.free_flow_time = t0;
    l.capacity = capacity;
    l.alpha = alpha;
    l.beta = beta;
    l.length = length;
    return l;
}

/// Network whose nodes are their own zones (zone id = node id) for
/// `zone_nodes`; other nodes are plain junctions.
inline urbanflow::Network network(const std::vector<urbanflow::Link>& links,
                                  const std::vector<urbanflow::NodeId>& zone_nodes) {
    urbanflow::Network net;
    std::vector<urbanflow::NodeId> ids;
    for (const auto& l : links) {
        ids.push_back(l.from_node);
        ids.push_back(l.to_node);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (auto id : ids) {
        urbanflow::Node n;
        n.node_id = id;
        n.x = static_cast<double>(id);
        if (std::find(zone_nodes.begin(), zone_nodes.end(), id) != zone_nodes.end()) n.zone_id = id;
        net.nodes.push_back(n);
    }
    net.links = links;
    for (auto z : zone_nodes) net.zone_centroids[z] = z;
    return net;
}

/// Binomial 3-sigma band check.
inline bool within_3_sigma(double count, double n, double p) {
    return std::abs(count - n * p) <= 3.0 * std::sqrt(n * p * (1.0 - p)) + 1e-9;
}

inline urbanflow::ScenarioBundle load_fixture(const std::string& cfg = "scenario.cfg") {
    return urbanflow::load_scenario(fixture_dir() / cfg);
}

} // namespace testing
