#pragma once

#include "mdcontour/pipeline.hpp"

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace mdcontour {

// One loaded dataset. Readers take an immutable snapshot; a layout recompute
// builds a new PreparedData on a worker thread and swaps it in whole.
class Session {
public:
    struct Snapshot {
        std::shared_ptr<const PreparedData> data;
        std::uint64_t revision = 0;
    };

    explicit Session(std::shared_ptr<const PreparedData> data,
                     std::shared_ptr<const RenderedImage> texture = nullptr);
    ~Session();

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    Snapshot snapshot() const;

    // False when a recompute is already running.
    bool start_layout(const LayoutOverrides& overrides);
    bool layout_busy() const;
    void wait_for_layout();
    std::optional<std::string> last_layout_error() const;

    // Field for (dim, variant, alpha, relax, resolution) at the snapshot's
    // revision, computed once and shared afterwards.
    std::shared_ptr<const CoordinateField> field(const Snapshot& snap, const ViewRequest& request);

    std::vector<std::uint8_t> render_png(const Snapshot& snap, const ViewRequest& request);

    const std::shared_ptr<const RenderedImage>& texture() const noexcept { return texture_; }
    std::size_t cached_fields() const;

    static constexpr std::size_t kCacheCapacity = 32;

private:
    using Key = std::tuple<std::string, int, double, double, std::uint32_t, std::uint32_t, std::uint64_t>;

    mutable std::mutex mutex_;
    std::condition_variable idle_;
    Snapshot current_;
    bool busy_ = false;
    std::optional<std::string> layout_error_;
    std::jthread worker_;

    std::map<Key, std::shared_ptr<const CoordinateField>> cache_;
    std::list<Key> cache_order_;

    std::shared_ptr<const RenderedImage> texture_;
};

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::optional<std::filesystem::path> static_dir;
};

// HTTP front end over a Session:
//   GET  /api/meta, /api/defaults, /api/status
//   GET  /api/positions?relax=t
//   GET  /api/render.png?dim&variant&alpha&relax&mode&spacing&w&h[&legend]
//   POST /api/layout  {iterations, lambda, temp, edgeLength, repulsion, bhTheta}
//   static viewer files at /
class Service {
public:
    Service(Session& session, ServiceOptions options);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    // Binds and serves on the calling thread until stop().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace mdcontour
