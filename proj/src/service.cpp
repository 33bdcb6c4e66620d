#include "mdcontour/service.hpp"

#include "mdcontour/image.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <system_error>

namespace mdcontour {

using nlohmann::json;

Session::Session(std::shared_ptr<const PreparedData> data, std::shared_ptr<const RenderedImage> texture)
    : current_{std::move(data), 1}, texture_(std::move(texture))
{
}

Session::~Session()
{
    if (worker_.joinable())
        worker_.join();
}

Session::Snapshot Session::snapshot() const
{
    std::lock_guard lock(mutex_);
    return current_;
}

bool Session::start_layout(const LayoutOverrides& overrides)
{
    std::unique_lock lock(mutex_);
    if (busy_)
        return false;
    busy_ = true;
    layout_error_.reset();
    auto base = current_.data;
    lock.unlock();

    if (worker_.joinable())
        worker_.join();
    worker_ = std::jthread([this, base, overrides] {
        std::shared_ptr<const PreparedData> next;
        std::optional<std::string> failure;
        try {
            next = relayout(*base, overrides);
        } catch (const std::exception& e) {
            failure = e.what();
        }
        std::lock_guard guard(mutex_);
        if (next) {
            current_ = Snapshot{std::move(next), current_.revision + 1};
            cache_.clear();
            cache_order_.clear();
        }
        layout_error_ = std::move(failure);
        busy_ = false;
        idle_.notify_all();
    });
    return true;
}

bool Session::layout_busy() const
{
    std::lock_guard lock(mutex_);
    return busy_;
}

void Session::wait_for_layout()
{
    std::unique_lock lock(mutex_);
    idle_.wait(lock, [this] { return !busy_; });
}

std::optional<std::string> Session::last_layout_error() const
{
    std::lock_guard lock(mutex_);
    return layout_error_;
}

std::size_t Session::cached_fields() const
{
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::shared_ptr<const CoordinateField> Session::field(const Snapshot& snap, const ViewRequest& request)
{
    const Key key{request.dim,           static_cast<int>(request.resolved_variant()),
                  request.resolved_alpha(), request.relax,
                  request.width,          request.height,
                  snap.revision};
    {
        std::lock_guard lock(mutex_);
        if (const auto it = cache_.find(key); it != cache_.end())
            return it->second;
    }
    auto computed = std::make_shared<const CoordinateField>(compute_view_field(*snap.data, request));

    std::lock_guard lock(mutex_);
    if (snap.revision != current_.revision)
        return computed;
    const auto [it, inserted] = cache_.emplace(key, computed);
    if (inserted) {
        cache_order_.push_back(key);
        while (cache_order_.size() > kCacheCapacity) {
            cache_.erase(cache_order_.front());
            cache_order_.pop_front();
        }
    }
    return it->second;
}

std::vector<std::uint8_t> Session::render_png(const Snapshot& snap, const ViewRequest& request)
{
    const auto f = field(snap, request);
    return encode_png(render_view(*snap.data, *f, request));
}

namespace {

struct FieldErrors {
    json fields = json::object();

    void add(const std::string& field, const std::string& message)
    {
        if (!fields.contains(field))
            fields[field] = message;
    }
    bool empty() const { return fields.empty(); }
};

std::optional<double> parse_number(const std::string& text)
{
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::optional<std::uint32_t> parse_count(const std::string& text)
{
    std::uint32_t v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        return std::nullopt;
    return v;
}

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& message, const FieldErrors& errors = {})
{
    json body{{"error", message}};
    if (!errors.empty())
        body["fields"] = errors.fields;
    send_json(res, status, body);
}

json variant_names()
{
    json out = json::array();
    for (auto v : {MlsVariant::Linear, MlsVariant::Mean, MlsVariant::Affine, MlsVariant::Rigid})
        out.push_back(std::string(to_string(v)));
    return out;
}

json mode_names()
{
    json out = json::array();
    for (auto m : {RenderMode::Contour, RenderMode::Discrete, RenderMode::DiscreteContour, RenderMode::Adaptive,
                   RenderMode::Gradient, RenderMode::Texture})
        out.push_back(std::string(to_string(m)));
    return out;
}

json layout_json(const LayoutParams& p)
{
    return {{"iterations", p.iterations}, {"lambda", p.decay},        {"temp", p.initial_temp},
            {"edgeLength", p.edge_length}, {"repulsion", p.repulsion}, {"bhTheta", p.bh_theta}};
}

json defaults_json(const Session& session)
{
    const auto snap = session.snapshot();
    json alpha_defaults = json::object();
    for (auto v : {MlsVariant::Linear, MlsVariant::Mean, MlsVariant::Affine, MlsVariant::Rigid})
        alpha_defaults[std::string(to_string(v))] = default_alpha(v);
    return {
        {"variant", std::string(to_string(MlsVariant::Affine))},
        {"variants", variant_names()},
        {"mode", std::string(to_string(RenderMode::Contour))},
        {"modes", mode_names()},
        {"alpha", {{"min", kAlphaSliderMin}, {"max", kAlphaSliderMax}, {"step", 0.05}, {"default", alpha_defaults}}},
        {"relax", {{"min", 0.0}, {"max", 1.0}, {"default", 1.0}}},
        {"resolution", {{"min", 1}, {"max", kMaxResolution}, {"default", 600}}},
        {"lambda", {{"min", 0.0}, {"max", 1.0}, {"exclusive", true}}},
        {"layout", layout_json(snap.data->layout_params)},
        {"texture", session.texture() != nullptr},
    };
}

// Parses and checks every query parameter, reporting each bad one by name.
std::optional<ViewRequest> parse_view_request(const httplib::Request& req, const Session& session,
                                              const PreparedData& data, FieldErrors& errors)
{
    ViewRequest out;
    out.texture = session.texture();
    if (!req.has_param("dim") || req.get_param_value("dim").empty())
        errors.add("dim", "required: a column name, 'a:b', or 'projection'");
    else
        out.dim = req.get_param_value("dim");

    if (req.has_param("variant")) {
        if (auto v = parse_variant(req.get_param_value("variant")))
            out.variant = *v;
        else
            errors.add("variant", "must be one of linear, mean, affine, rigid");
    }
    if (req.has_param("mode")) {
        if (auto m = parse_mode(req.get_param_value("mode")))
            out.mode = *m;
        else
            errors.add("mode", "must be one of contour, discrete, discrete+contour, adaptive, gradient, texture");
    }
    auto number = [&](const char* name, auto assign) {
        if (!req.has_param(name))
            return;
        if (auto v = parse_number(req.get_param_value(name)))
            assign(*v);
        else
            errors.add(name, "must be a finite number");
    };
    number("alpha", [&](double v) { out.alpha = v; });
    number("relax", [&](double v) { out.relax = v; });
    number("spacing", [&](double v) { out.spacing = v; });
    number("lineWidth", [&](double v) { out.line_width_px = v; });
    number("pointRadius", [&](double v) { out.point_radius = v; });
    auto count = [&](const char* name, std::uint32_t& slot) {
        if (!req.has_param(name))
            return;
        if (auto v = parse_count(req.get_param_value(name)))
            slot = *v;
        else
            errors.add(name, "must be a positive integer");
    };
    count("w", out.width);
    count("h", out.height);
    if (req.has_param("legend")) {
        const auto& v = req.get_param_value("legend");
        out.legend = v == "1" || v == "true";
        if (!out.legend && v != "0" && v != "false")
            errors.add("legend", "must be 0 or 1");
    }

    if (out.alpha) {
        MlsParams p = MlsParams::defaults_for(out.resolved_variant());
        p.alpha = *out.alpha;
        try {
            p.validate();
        } catch (const Error& e) {
            errors.add("alpha", e.what());
        }
    }
    if (!(out.relax >= 0.0 && out.relax <= 1.0))
        errors.add("relax", "must lie in [0, 1]");
    if (out.width == 0 || out.width > kMaxResolution)
        errors.add("w", "must be between 1 and 8192");
    if (out.height == 0 || out.height > kMaxResolution)
        errors.add("h", "must be between 1 and 8192");
    if (out.spacing && !(*out.spacing > 0.0))
        errors.add("spacing", "must be > 0");
    if (!(out.line_width_px > 0.0))
        errors.add("lineWidth", "must be > 0");
    if (!(out.point_radius >= 0.0))
        errors.add("pointRadius", "must be >= 0");
    if (out.mode == RenderMode::Texture && !out.texture)
        errors.add("mode", "texture mode needs a texture given at launch (--texture)");

    if (!errors.empty())
        return std::nullopt;

    // Target-dependent checks; unknown dimensions propagate as UnknownDimension.
    const TargetAssignment targets = resolve_targets(data, out.dim);
    if (out.resolved_variant() == MlsVariant::Rigid && targets.mode == TargetMode::Single)
        errors.add("variant", "rigid is undefined for a single dimension");
    if (out.mode == RenderMode::Gradient && targets.components() < 2)
        errors.add("mode", "gradient needs two dimensions ('a:b') or 'projection'");
    if (!errors.empty())
        return std::nullopt;
    return out;
}

std::optional<LayoutOverrides> parse_layout_body(const std::string& body, FieldErrors& errors)
{
    LayoutOverrides out;
    if (body.empty())
        return out;
    const json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        errors.add("body", "must be a JSON object");
        return std::nullopt;
    }
    auto number = [&](const char* name) -> std::optional<double> {
        if (!j.contains(name) || j[name].is_null())
            return std::nullopt;
        if (!j[name].is_number() || !std::isfinite(j[name].get<double>())) {
            errors.add(name, "must be a number");
            return std::nullopt;
        }
        return j[name].get<double>();
    };
    if (auto v = number("iterations")) {
        if (*v < 0 || *v > 1e6 || std::floor(*v) != *v)
            errors.add("iterations", "must be an integer in [0, 1000000]");
        else
            out.iterations = static_cast<std::uint32_t>(*v);
    }
    if (auto v = number("lambda")) {
        if (!(*v > 0.0 && *v < 1.0))
            errors.add("lambda", "must lie in (0, 1)");
        else
            out.decay = *v;
    }
    auto positive = [&](const char* name, std::optional<double>& slot) {
        if (auto v = number(name)) {
            if (!(*v > 0.0))
                errors.add(name, "must be > 0");
            else
                slot = *v;
        }
    };
    positive("temp", out.initial_temp);
    positive("edgeLength", out.edge_length);
    positive("repulsion", out.repulsion);
    positive("bhTheta", out.bh_theta);
    for (const auto& [key, _] : j.items()) {
        static const char* known[] = {"iterations", "lambda", "temp", "edgeLength", "repulsion", "bhTheta"};
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            errors.add(key, "unknown layout parameter");
    }
    if (!errors.empty())
        return std::nullopt;
    return out;
}

constexpr const char* kStubIndex = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>mdcontour</title></head>
<body>
<h1>mdcontour service</h1>
<p>No viewer directory was given (--static-dir). API endpoints:</p>
<ul>
<li><a href="/api/meta">/api/meta</a></li>
<li><a href="/api/defaults">/api/defaults</a></li>
<li><a href="/api/positions?relax=1">/api/positions?relax=1</a></li>
<li>/api/render.png?dim=...&amp;variant=affine&amp;alpha=1.5&amp;relax=1&amp;mode=contour&amp;w=600&amp;h=600</li>
<li>POST /api/layout</li>
</ul>
</body></html>
)";

} // namespace

struct Service::Impl {
    Session& session;
    ServiceOptions options;
    httplib::Server server;
    std::jthread thread;

    Impl(Session& s, ServiceOptions o) : session(s), options(std::move(o)) { install(); }

    void install()
    {
        server.Get("/api/meta", [this](const httplib::Request&, httplib::Response& res) {
            const auto snap = session.snapshot();
            send_json(res, 200,
                      {{"columns", snap.data->raw.column_names()},
                       {"rowCount", snap.data->raw.row_count()},
                       {"revision", snap.revision},
                       {"defaults", defaults_json(session)}});
        });

        server.Get("/api/defaults", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, defaults_json(session));
        });

        server.Get("/api/status", [this](const httplib::Request&, httplib::Response& res) {
            const auto snap = session.snapshot();
            json body{{"busy", session.layout_busy()}, {"revision", snap.revision}};
            if (auto err = session.last_layout_error())
                body["lastError"] = *err;
            send_json(res, 200, body);
        });

        server.Get("/api/positions", [this](const httplib::Request& req, httplib::Response& res) {
            double relax = 1.0;
            if (req.has_param("relax")) {
                const auto v = parse_number(req.get_param_value("relax"));
                if (!v || !(*v >= 0.0 && *v <= 1.0)) {
                    FieldErrors errors;
                    errors.add("relax", "must lie in [0, 1]");
                    return send_error(res, 400, "invalid parameters", errors);
                }
                relax = *v;
            }
            const auto snap = session.snapshot();
            const InterpolatedLayout layout = interpolate_layout(snap.data->layout, relax);
            json positions = json::array();
            for (const Vec2& p : layout.positions)
                positions.push_back({p.x, p.y});
            json triangles = json::array();
            for (const Triangle& t : snap.data->layout.mesh.triangles)
                triangles.push_back({t[0], t[1], t[2]});
            send_json(res, 200,
                      {{"revision", snap.revision},
                       {"relax", relax},
                       {"positions", positions},
                       {"triangles", triangles},
                       {"invertedTriangles", layout.inverted_triangles}});
        });

        server.Get("/api/render.png", [this](const httplib::Request& req, httplib::Response& res) {
            const auto snap = session.snapshot();
            FieldErrors errors;
            try {
                const auto request = parse_view_request(req, session, *snap.data, errors);
                if (!request)
                    return send_error(res, 400, "invalid parameters", errors);
                const auto png = session.render_png(snap, *request);
                res.status = 200;
                res.set_header("X-Mdcontour-Revision", std::to_string(snap.revision));
                res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
            } catch (const Error& e) {
                if (e.code() == ErrorCode::UnknownDimension)
                    return send_error(res, 404, e.what());
                if (is_usage_error(e))
                    return send_error(res, 400, e.what());
                send_error(res, 500, e.what());
            }
        });

        server.Post("/api/layout", [this](const httplib::Request& req, httplib::Response& res) {
            FieldErrors errors;
            const auto overrides = parse_layout_body(req.body, errors);
            if (!overrides)
                return send_error(res, 400, "invalid layout parameters", errors);
            const auto before = session.snapshot().revision;
            if (!session.start_layout(*overrides))
                return send_error(res, 409, "a layout recompute is already in progress");
            const bool wait = req.has_param("wait") && req.get_param_value("wait") != "0";
            if (!wait)
                return send_json(res, 202, {{"status", "running"}, {"revision", before}});
            session.wait_for_layout();
            if (auto err = session.last_layout_error())
                return send_error(res, 500, *err);
            send_json(res, 200, {{"status", "done"}, {"revision", session.snapshot().revision}});
        });

        if (options.static_dir) {
            if (!server.set_mount_point("/", options.static_dir->string()))
                throw Error(ErrorCode::IoError, "static directory not found: " + options.static_dir->string());
        } else {
            server.Get("/", [](const httplib::Request&, httplib::Response& res) {
                res.set_content(kStubIndex, "text/html; charset=utf-8");
            });
        }
    }

    int bind()
    {
        if (options.port == 0) {
            const int port = server.bind_to_any_port(options.host);
            if (port < 0)
                throw Error(ErrorCode::IoError, "could not bind " + options.host);
            return port;
        }
        if (!server.bind_to_port(options.host, options.port))
            throw Error(ErrorCode::IoError,
                        "could not bind " + options.host + ":" + std::to_string(options.port));
        return options.port;
    }
};

Service::Service(Session& session, ServiceOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options)))
{
}

Service::~Service() { stop(); }

int Service::start()
{
    const int port = impl_->bind();
    impl_->thread = std::jthread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void Service::run()
{
    impl_->bind();
    impl_->server.listen_after_bind();
}

void Service::stop()
{
    if (!impl_)
        return;
    impl_->server.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

} // namespace mdcontour
