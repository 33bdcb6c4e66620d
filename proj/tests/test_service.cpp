#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "mdcontour/image.hpp"
#include "mdcontour/service.hpp"
#include "oracles.hpp"

#include <httplib.h>
#include <json.hpp>

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <map>
#include <thread>

using namespace mdcontour;
using nlohmann::json;

namespace {

constexpr std::size_t kRows = 80;
constexpr std::uint64_t kSeed = 3;

std::shared_ptr<const PreparedData> prepared(std::uint32_t iterations = 60)
{
    LayoutOverrides o;
    o.iterations = iterations;
    return prepare(parse_csv(fixture::cars_csv(kRows, kSeed)), o, 0);
}

struct Served {
    Session session;
    Service service;
    int port;
    httplib::Client client;

    explicit Served(std::shared_ptr<const PreparedData> data, ServiceOptions options = {})
        : session(std::move(data)), service(session, with_any_port(std::move(options))), port(service.start()),
          client("127.0.0.1", port)
    {
    }

    static ServiceOptions with_any_port(ServiceOptions o)
    {
        o.port = 0;
        return o;
    }
};

json get_json(httplib::Client& c, const std::string& path, int expect = 200)
{
    const auto res = c.Get(path);
    REQUIRE(res);
    CHECK(res->status == expect);
    return json::parse(res->body);
}

std::vector<Vec2> positions_of(const json& body)
{
    std::vector<Vec2> out;
    for (const auto& p : body["positions"])
        out.push_back({p[0].get<double>(), p[1].get<double>()});
    return out;
}

// every returned triangle keeps the orientation it has at relax = 0
std::size_t orientation_flips(const json& relaxed, const json& original)
{
    const auto a = positions_of(relaxed);
    const auto b = positions_of(original);
    std::size_t flips = 0;
    for (const auto& t : relaxed["triangles"]) {
        const auto i = t[0].get<std::size_t>(), j = t[1].get<std::size_t>(), k = t[2].get<std::size_t>();
        const double now = oracle::signed_area(a[i], a[j], a[k]);
        const double then = oracle::signed_area(b[i], b[j], b[k]);
        if (!(now * then > 0.0))
            ++flips;
    }
    return flips;
}

} // namespace

TEST_CASE("meta and defaults describe the loaded session")
{
    Served s(prepared());
    const json meta = get_json(s.client, "/api/meta");
    CHECK(meta["columns"].get<std::vector<std::string>>() == fixture::car_columns());
    CHECK(meta["rowCount"] == kRows);
    CHECK(meta["revision"] == 1);
    CHECK(meta["defaults"]["variant"] == "affine");

    const json d = get_json(s.client, "/api/defaults");
    CHECK(d == meta["defaults"]);
    CHECK(d["variants"] == json::array({"linear", "mean", "affine", "rigid"}));
    CHECK(d["modes"].size() == 6);
    CHECK(d["alpha"]["default"]["affine"] == 1.5);
    CHECK(d["alpha"]["min"].get<double>() > 0.0);
    CHECK(d["relax"]["default"] == 1.0);
    CHECK(d["layout"]["iterations"] == 60);
    CHECK(d["layout"]["lambda"] == 0.99);
    CHECK(d["texture"] == false);

    const json status = get_json(s.client, "/api/status");
    CHECK(status["busy"] == false);
    CHECK(status["revision"] == 1);
}

TEST_CASE("positions follow the relax parameter")
{
    const auto data = prepared();
    Served s(data);
    const json at0 = get_json(s.client, "/api/positions?relax=0");
    const json at1 = get_json(s.client, "/api/positions?relax=1");
    const json mid = get_json(s.client, "/api/positions?relax=0.25");
    const auto p0 = positions_of(at0), p1 = positions_of(at1), pm = positions_of(mid);
    REQUIRE(p0.size() == kRows);
    for (std::size_t i = 0; i < kRows; ++i) {
        CHECK(p0[i] == data->layout.mesh.original_pos[i]);
        CHECK(p1[i] == data->layout.mesh.current_pos[i]);
        CHECK(pm[i].x == doctest::Approx(0.75 * p0[i].x + 0.25 * p1[i].x).epsilon(1e-12));
        CHECK(pm[i].y == doctest::Approx(0.75 * p0[i].y + 0.25 * p1[i].y).epsilon(1e-12));
    }
    CHECK(at0["triangles"].size() == data->layout.mesh.triangle_count());
    CHECK(at1["invertedTriangles"] == 0);
    CHECK(orientation_flips(at1, at0) == 0);

    const json bad = get_json(s.client, "/api/positions?relax=1.5", 400);
    CHECK(bad["fields"].contains("relax"));
    get_json(s.client, "/api/positions?relax=abc", 400);
}

TEST_CASE("render endpoint matches the shared pipeline and is repeatable")
{
    const auto data = prepared();
    Served s(data);
    const std::string q = "/api/render.png?dim=mpg&variant=affine&alpha=1.5&relax=0.8&mode=adaptive&w=160&h=120";
    const auto first = s.client.Get(q);
    REQUIRE(first);
    CHECK(first->status == 200);
    CHECK(first->get_header_value("Content-Type") == "image/png");
    CHECK(first->get_header_value("X-Mdcontour-Revision") == "1");

    ViewRequest req;
    req.dim = "mpg";
    req.variant = MlsVariant::Affine;
    req.alpha = 1.5;
    req.relax = 0.8;
    req.mode = RenderMode::Adaptive;
    req.width = 160;
    req.height = 120;
    const auto expected = encode_png(render_view(*data, compute_view_field(*data, req), req));
    CHECK(first->body == std::string(expected.begin(), expected.end()));

    const auto second = s.client.Get(q);
    REQUIRE(second);
    CHECK(second->body == first->body);
    CHECK(s.session.cached_fields() == 1);

    const RenderedImage img = decode_png(expected);
    CHECK(img.width == 160);
    CHECK(img.height == 120);

    const auto legend = s.client.Get(q + "&legend=1");
    REQUIRE(legend);
    CHECK(decode_png(std::span(reinterpret_cast<const std::uint8_t*>(legend->body.data()), legend->body.size()))
              .width > 160);
    // the legend reuses the cached field
    CHECK(s.session.cached_fields() == 1);
}

TEST_CASE("render endpoint equals the command line output for the same config")
{
    const fixture::TempDir dir("svc_cli");
    fixture::write_text(dir / "cars.csv", fixture::cars_csv(kRows, kSeed));
    const std::string cmd = std::string("\"") + MDCONTOUR_CLI + "\" --input \"" + (dir / "cars.csv").string() +
                            "\" --dims mpg --variant affine --alpha 1.5 --relax 0.8 --mode adaptive"
                            " --resolution 160x120 --iterations 60 --output \"" +
                            (dir / "cli.png").string() + "\" >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(raw));
    REQUIRE(WEXITSTATUS(raw) == 0);

    Served s(prepared());
    const auto res =
        s.client.Get("/api/render.png?dim=mpg&variant=affine&alpha=1.5&relax=0.8&mode=adaptive&w=160&h=120");
    REQUIRE(res);
    CHECK(res->body == fixture::read_bytes(dir / "cli.png"));
}

TEST_CASE("bad render parameters")
{
    Served s(prepared());
    SUBCASE("field-level messages for every bad value")
    {
        const json body =
            get_json(s.client, "/api/render.png?dim=mpg&variant=cubic&alpha=x&relax=2&w=0&h=9000&mode=wavy", 400);
        CHECK(body.contains("error"));
        for (const char* f : {"variant", "alpha", "relax", "w", "h", "mode"})
            CHECK_MESSAGE(body["fields"].contains(f), f);
    }
    SUBCASE("missing dimension")
    {
        const json body = get_json(s.client, "/api/render.png?variant=mean", 400);
        CHECK(body["fields"].contains("dim"));
    }
    SUBCASE("alpha outside the slider range")
    {
        const json body = get_json(s.client, "/api/render.png?dim=mpg&alpha=0", 400);
        CHECK(body["fields"].contains("alpha"));
    }
    SUBCASE("rigid on one dimension and gradient on one component")
    {
        CHECK(get_json(s.client, "/api/render.png?dim=mpg&variant=rigid", 400)["fields"].contains("variant"));
        CHECK(get_json(s.client, "/api/render.png?dim=mpg&mode=gradient", 400)["fields"].contains("mode"));
    }
    SUBCASE("texture mode without a texture")
    {
        CHECK(get_json(s.client, "/api/render.png?dim=mpg&mode=texture", 400)["fields"].contains("mode"));
    }
    SUBCASE("unknown dimension is 404 and names the columns")
    {
        const json body = get_json(s.client, "/api/render.png?dim=torque", 404);
        const std::string msg = body["error"];
        CHECK(msg.find("torque") != std::string::npos);
        CHECK(msg.find("horsepower") != std::string::npos);
        get_json(s.client, "/api/render.png?dim=mpg:torque", 404);
    }
    CHECK(s.session.cached_fields() == 0);
}

TEST_CASE("two-component views accept rigid and gradient")
{
    Served s(prepared());
    for (const char* dim : {"weight:mpg", "projection"}) {
        const auto ok = s.client.Get(std::string("/api/render.png?variant=rigid&mode=gradient&w=40&h=40&dim=") + dim);
        REQUIRE(ok);
        CHECK(ok->status == 200);
    }
    CHECK(s.session.cached_fields() == 2);
}

TEST_CASE("layout recompute bumps the revision and clears cached fields")
{
    Served s(prepared());
    const std::string q = "/api/render.png?dim=weight&w=64&h=64";
    const auto before = s.client.Get(q);
    REQUIRE(before);
    REQUIRE(before->status == 200);
    CHECK(s.session.cached_fields() == 1);

    const auto res = s.client.Post("/api/layout?wait=1", R"({"iterations": 500, "lambda": 0.99})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json body = json::parse(res->body);
    CHECK(body["status"] == "done");
    CHECK(body["revision"] == 2);
    CHECK(s.session.cached_fields() == 0);
    CHECK(get_json(s.client, "/api/meta")["revision"] == 2);
    CHECK(get_json(s.client, "/api/defaults")["layout"]["iterations"] == 500);

    const json relaxed = get_json(s.client, "/api/positions?relax=1");
    const json original = get_json(s.client, "/api/positions?relax=0");
    CHECK(relaxed["revision"] == 2);
    CHECK(relaxed["invertedTriangles"] == 0);
    CHECK(orientation_flips(relaxed, original) == 0);

    const auto after = s.client.Get(q);
    REQUIRE(after);
    CHECK(after->get_header_value("X-Mdcontour-Revision") == "2");
    CHECK(after->body != before->body);
}

TEST_CASE("layout body validation")
{
    Served s(prepared());
    auto post = [&](const std::string& body) {
        const auto res = s.client.Post("/api/layout?wait=1", body, "application/json");
        REQUIRE(res);
        return std::make_pair(res->status, json::parse(res->body));
    };
    auto [status, body] = post(R"({"lambda": 1.5, "bogus": 1, "iterations": -3})");
    CHECK(status == 400);
    CHECK(body["fields"].contains("lambda"));
    CHECK(body["fields"].contains("bogus"));
    CHECK(body["fields"].contains("iterations"));
    CHECK(post("[1, 2]").first == 400);
    CHECK(post("{not json").first == 400);
    CHECK(post(R"({"bhTheta": 0})").first == 400);
    CHECK(post(R"({"temp": "hot"})").first == 400);
    CHECK(s.session.snapshot().revision == 1);
}

TEST_CASE("a second recompute while one runs is refused")
{
    Served s(prepared());
    const auto first = s.client.Post("/api/layout", R"({"iterations": 40000})", "application/json");
    REQUIRE(first);
    CHECK(first->status == 202);
    CHECK(json::parse(first->body)["status"] == "running");
    const auto second = s.client.Post("/api/layout", R"({"iterations": 10})", "application/json");
    REQUIRE(second);
    CHECK(second->status == 409);
    CHECK(get_json(s.client, "/api/status")["busy"] == true);
    s.session.wait_for_layout();
    const json status = get_json(s.client, "/api/status");
    CHECK(status["busy"] == false);
    CHECK(status["revision"] == 2);
    CHECK_FALSE(status.contains("lastError"));
}

TEST_CASE("readers see whole snapshots while a recompute swaps in")
{
    Served s(prepared());
    std::map<int, std::string> by_revision;
    const auto start = s.client.Post("/api/layout", R"({"iterations": 3000})", "application/json");
    REQUIRE(start);
    REQUIRE(start->status == 202);
    std::size_t reads = 0;
    bool mismatch = false;
    while (true) {
        const bool was_busy = s.session.layout_busy();
        httplib::Client c("127.0.0.1", s.port);
        const auto res = c.Get("/api/positions?relax=1");
        REQUIRE(res);
        const json body = json::parse(res->body);
        const int rev = body["revision"];
        auto [it, fresh] = by_revision.emplace(rev, res->body);
        if (!fresh && it->second != res->body)
            mismatch = true;
        ++reads;
        if (!was_busy)
            break;
    }
    CHECK_FALSE(mismatch);
    CHECK(by_revision.count(2) == 1);
    CHECK(reads >= 2);
}

TEST_CASE("identical queries hit one cache entry across threads")
{
    Served s(prepared());
    const std::string q = "/api/render.png?dim=horsepower&variant=mean&w=96&h=96";
    std::vector<std::string> bodies(4);
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < bodies.size(); ++i)
        threads.emplace_back([&, i] {
            httplib::Client c("127.0.0.1", s.port);
            if (const auto res = c.Get(q))
                bodies[i] = res->body;
        });
    threads.clear();
    for (const auto& b : bodies) {
        CHECK_FALSE(b.empty());
        CHECK(b == bodies[0]);
    }
    CHECK(s.session.cached_fields() == 1);
}

TEST_CASE("cache stays bounded")
{
    Served s(prepared(10));
    for (std::size_t i = 0; i < Session::kCacheCapacity + 5; ++i) {
        const auto res = s.client.Get("/api/render.png?dim=mpg&w=8&h=" + std::to_string(8 + i));
        REQUIRE(res);
        CHECK(res->status == 200);
    }
    CHECK(s.session.cached_fields() == Session::kCacheCapacity);
}

TEST_CASE("static files are served at the root")
{
    SUBCASE("viewer directory")
    {
        const fixture::TempDir dir("static");
        fixture::write_text(dir / "index.html", "<html>viewer</html>");
        fixture::write_text(dir / "app.js", "console.log(1);");
        ServiceOptions o;
        o.static_dir = dir.path();
        Served s(prepared(10), o);
        const auto index = s.client.Get("/");
        REQUIRE(index);
        CHECK(index->status == 200);
        CHECK(index->body == "<html>viewer</html>");
        const auto js = s.client.Get("/app.js");
        REQUIRE(js);
        CHECK(js->body == "console.log(1);");
        CHECK(get_json(s.client, "/api/meta")["rowCount"] == kRows);
    }
    SUBCASE("stub index without a viewer")
    {
        Served s(prepared(10));
        const auto index = s.client.Get("/");
        REQUIRE(index);
        CHECK(index->status == 200);
        CHECK(index->body.find("/api/meta") != std::string::npos);
    }
    SUBCASE("missing viewer directory")
    {
        Session session(prepared(10));
        ServiceOptions o;
        o.static_dir = "/nonexistent/mdcontour/viewer";
        CHECK_THROWS_AS(Service(session, o), Error);
    }
}
