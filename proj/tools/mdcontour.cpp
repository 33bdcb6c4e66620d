// mdcontour: contour plots of multidimensional data over a planar layout.
#include "mdcontour/image.hpp"
#include "mdcontour/pipeline.hpp"
#include "mdcontour/service.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <regex>

using namespace mdcontour;

namespace {

bool parse_resolution(const std::string& text, std::uint32_t& w, std::uint32_t& h)
{
    static const std::regex pattern(R"((\d{1,5})[xX](\d{1,5}))");
    std::smatch m;
    if (!std::regex_match(text, m, pattern))
        return false;
    w = static_cast<std::uint32_t>(std::stoul(m[1]));
    h = static_cast<std::uint32_t>(std::stoul(m[2]));
    return true;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Render contour plots of every dimension of a numeric CSV over a relaxed 2D layout."};
    app.set_version_flag("--version", "mdcontour 1.0");

    PipelineConfig cfg;
    std::string dims = "all";
    std::string variant, mode = "contour", resolution = "600x600", delimiter = ",";
    std::optional<double> alpha, spacing, lambda, temp, edge_length, repulsion, bh_theta;
    std::optional<std::uint32_t> iterations;
    std::string texture;
    bool serve = false, strict = false;
    int port = 8080;
    std::string host = "127.0.0.1", static_dir;

    app.add_option("--input,-i", cfg.input, "CSV file with a header row")->required();
    app.add_option("--dims", dims, "comma list of columns, 'a:b' pairs, 'projection', or 'all'");
    app.add_option("--variant", variant, "linear | mean | affine | rigid (default affine)");
    app.add_option("--alpha", alpha, "MLS weight exponent (default 1.5 affine, 1 otherwise)");
    app.add_option("--relax", cfg.relax, "blend between projected (0) and relaxed (1) positions");
    app.add_option("--mode", mode, "contour | discrete | discrete+contour | adaptive | gradient | texture");
    app.add_option("--spacing", spacing, "isoline spacing in data units (default: automatic)");
    app.add_option("--resolution", resolution, "image size WxH");
    app.add_option("--iterations", iterations, "layout iterations");
    app.add_option("--lambda", lambda, "layout temperature decay in (0, 1)");
    app.add_option("--temp", temp, "initial layout temperature");
    app.add_option("--edge-length", edge_length, "desired layout edge length");
    app.add_option("--repulsion", repulsion, "repulsive force constant (default: edge length cubed)");
    app.add_option("--bh-theta", bh_theta, "Barnes-Hut opening threshold");
    app.add_option("--seed", cfg.seed, "seed for duplicate-point jitter");
    app.add_option("--output,-o", cfg.output, "output path; {dim} is replaced by the dimension name");
    app.add_flag("--legend", cfg.legend, "append a colour legend strip");
    app.add_option("--texture", texture, "PNG used by texture mode");
    app.add_option("--line-width", cfg.line_width_px, "isoline width in pixels");
    app.add_option("--point-radius", cfg.point_radius, "data point marker radius in pixels (0 hides them)");
    app.add_option("--delimiter", delimiter, "CSV field delimiter");
    app.add_flag("--strict", strict, "fail on non-numeric columns instead of skipping them");
    app.add_flag("--serve", serve, "start the HTTP service instead of writing images");
    app.add_option("--port", port, "service port");
    app.add_option("--host", host, "service bind address");
    app.add_option("--static-dir", static_dir, "directory with the viewer's static files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    auto usage = [](const std::string& message) {
        std::cerr << "mdcontour: " << message << "\n";
        return 2;
    };

    cfg.dims.clear();
    for (std::size_t start = 0; start <= dims.size();) {
        const auto comma = std::min(dims.find(',', start), dims.size());
        if (comma > start)
            cfg.dims.push_back(dims.substr(start, comma - start));
        start = comma + 1;
    }
    if (!variant.empty()) {
        cfg.variant = parse_variant(variant);
        if (!cfg.variant)
            return usage("--variant must be one of linear, mean, affine, rigid");
    }
    const auto parsed_mode = parse_mode(mode);
    if (!parsed_mode)
        return usage("--mode must be one of contour, discrete, discrete+contour, adaptive, gradient, texture");
    cfg.mode = *parsed_mode;
    if (!parse_resolution(resolution, cfg.width, cfg.height))
        return usage("--resolution must look like 600x600");
    if (delimiter.size() != 1)
        return usage("--delimiter must be a single character");
    cfg.delimiter = delimiter[0];
    cfg.skip_non_numeric = !strict;
    cfg.alpha = alpha;
    cfg.spacing = spacing;
    cfg.layout.iterations = iterations;
    cfg.layout.decay = lambda;
    cfg.layout.initial_temp = temp;
    cfg.layout.edge_length = edge_length;
    cfg.layout.repulsion = repulsion;
    cfg.layout.bh_theta = bh_theta;
    if (!texture.empty())
        cfg.texture = texture;

    try {
        if (!serve) {
            for (const auto& path : run_pipeline(cfg))
                std::cout << path.string() << "\n";
            return 0;
        }

        Dataset raw;
        try {
            raw = load_csv(cfg.input, CsvOptions{cfg.delimiter, cfg.skip_non_numeric});
        } catch (const Error& e) {
            throw StageError("load", e);
        }
        std::shared_ptr<const RenderedImage> tex;
        if (cfg.texture)
            tex = std::make_shared<RenderedImage>(read_png(*cfg.texture));
        Session session(prepare(std::move(raw), cfg.layout, cfg.seed), tex);
        ServiceOptions options;
        options.host = host;
        options.port = port;
        if (!static_dir.empty())
            options.static_dir = static_dir;
        Service service(session, options);
        std::cerr << "mdcontour: serving on http://" << host << ":" << port << "/\n";
        service.run();
        return 0;
    } catch (const StageError& e) {
        std::cerr << "mdcontour: " << to_string(e.code()) << " in stage " << e.stage() << ": " << e.what() << "\n";
        return is_usage_error(e) ? 2 : 1;
    } catch (const Error& e) {
        std::cerr << "mdcontour: " << to_string(e.code()) << ": " << e.what() << "\n";
        return is_usage_error(e) ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "mdcontour: " << e.what() << "\n";
        return 1;
    }
}
