#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "mmcut/errors.hpp"
#include "mmcut/raster_io.hpp"
#include "mmcut/segmenter.hpp"
#include "mmcut/synth.hpp"

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[64];
    snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(const mmcut::SegmentResult& result, const fs::path& path) {
    std::ofstream out(path);
    const size_t J = result.set.entries.size();
    out << "iteration,total_energy,surrogate_energy,labels_changed";
    for (size_t j = 1; j <= J; ++j) out << ",c_" << j;
    out << "\n";
    for (const auto& row : result.trace) {
        out << row.iteration << "," << fmt(row.total_energy) << ","
            << fmt(row.surrogate_energy) << "," << row.labels_changed;
        for (double c : row.c) out << "," << fmt(c);
        out << "\n";
    }
}

void write_report_json(const mmcut::SegmentResult& result, const fs::path& path) {
    nlohmann::ordered_json transforms = nlohmann::ordered_json::array();
    for (const auto& e : result.set.entries)
        transforms.push_back({{"alpha", e.current_transform.alpha},
                              {"omega_angle", e.current_transform.omega_angle},
                              {"c", {e.current_transform.c.x, e.current_transform.c.y}}});
    const nlohmann::ordered_json report{
        {"converged", result.converged},
        {"iterations", result.trace.size()},
        {"beta", result.set.beta},
        {"transforms", transforms},
    };
    std::ofstream out(path);
    out << report.dump(2) << "\n";
}

void write_overlay_png(const mmcut::GrayImage& image, const mmcut::BinaryMask& mask,
                       const fs::path& path) {
    const int w = image.width(), h = image.height();
    mmcut::Grid<uint8_t> r(w, h), g(w, h), b(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = std::clamp(image.at(x, y), 0.0, 1.0);
            const uint8_t gray = (uint8_t)std::lround(v * 255.0);
            bool contour = false;
            if (mask.at(x, y)) {
                // Border pixels count: outside the frame reads as background.
                const int nx[4] = {x - 1, x + 1, x, x};
                const int ny[4] = {y, y, y - 1, y + 1};
                for (int k = 0; k < 4 && !contour; ++k)
                    contour = nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h ||
                              !mask.at(nx[k], ny[k]);
            }
            r.at(x, y) = contour ? 255 : gray;
            g.at(x, y) = contour ? 0 : gray;
            b.at(x, y) = contour ? 0 : gray;
        }
    mmcut::save_rgb(r, g, b, path.string());
}

int run_command(const std::string& manifest_path, bool verbose,
                const std::string& dump_network_dir) {
    std::ifstream in(manifest_path);
    if (!in) throw mmcut::IoError("cannot open manifest: " + manifest_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw mmcut::IoError("manifest " + manifest_path + ": " + e.what());
    }
    for (const char* key : {"image_path", "templates_path", "output_dir"})
        if (!doc.contains(key))
            throw mmcut::IoError("manifest " + manifest_path + ": missing \"" +
                                 std::string(key) + "\"");

    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve = [&base](const std::string& p) {
        fs::path q(p);
        return q.is_relative() ? (base / q).string() : q.string();
    };
    const std::string image_path = resolve(doc.at("image_path").get<std::string>());
    const std::string templates_path = resolve(doc.at("templates_path").get<std::string>());
    const fs::path out_dir = resolve(doc.at("output_dir").get<std::string>());

    mmcut::SegmenterConfig config;
    config.lambda = doc.value("lambda", config.lambda);
    config.tol_shape = doc.value("tol_shape", config.tol_shape);
    config.max_mm_iters = doc.value("max_mm_iters", config.max_mm_iters);
    config.refit_fraction = doc.value("refit_fraction", config.refit_fraction);
    config.realign_fraction = doc.value("realign_fraction", config.realign_fraction);
    config.shared_transform = doc.value("shared_transform", config.shared_transform);
    config.epsilon_smooth = doc.value("epsilon_smooth", config.epsilon_smooth);
    config.beta_ramp_iters = doc.value("beta_ramp_iters", config.beta_ramp_iters);
    if (doc.contains("beta_override"))
        config.beta_override = doc.at("beta_override").get<double>();

    if (!dump_network_dir.empty()) {
        fs::create_directories(dump_network_dir);
        const fs::path nd(dump_network_dir);
        config.network_observer = [nd](int iteration, const mmcut::FlowNetwork& net) {
            char name[32];
            snprintf(name, sizeof name, "network_%04d.dimacs", iteration);
            std::ofstream dump(nd / name);
            mmcut::dump_dimacs(net, dump);
        };
    }

    const mmcut::GrayImage image = mmcut::load_image(image_path);
    const mmcut::TemplateSet templates = mmcut::load_template_set(templates_path);

    const mmcut::SegmentResult result = mmcut::segment(image, templates, config);

    if (verbose) {
        std::cout << "beta = " << fmt(result.set.beta) << "\n";
        for (const auto& row : result.trace) {
            std::cout << "iter " << row.iteration << ": total " << fmt(row.total_energy)
                      << ", surrogate " << fmt(row.surrogate_energy) << ", flipped "
                      << row.labels_changed << "\n";
        }
        std::cout << (result.converged ? "converged" : "max iterations reached") << " after "
                  << result.trace.size() << " iteration(s)\n";
    }

    fs::create_directories(out_dir);
    mmcut::save_mask(result.mask, (out_dir / "mask.png").string());
    write_trace_csv(result, out_dir / "trace.csv");
    write_overlay_png(image, result.mask, out_dir / "overlay.png");
    write_report_json(result, out_dir / "report.json");

    return result.converged ? 0 : 2;
}

int synth_command(const std::string& kind, uint64_t seed, const std::string& out,
                  int lobes, double fraction) {
    mmcut::SynthCase c;
    if (kind == "blob")
        c = mmcut::make_blob_case(seed);
    else if (kind == "lshape")
        c = mmcut::make_lshape_case(seed);
    else if (kind == "star")
        c = mmcut::make_star_case(seed, lobes);
    else if (kind == "corrupt")
        c = mmcut::make_corrupt_case(seed, fraction);
    else if (kind == "hybrid")
        c = mmcut::make_hybrid_case(seed);
    else
        throw mmcut::IoError("unknown synth case: " + kind);
    mmcut::write_case(c, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shape-prior graph-cut segmentation"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Segment an image per a JSON manifest");
    std::string manifest_path;
    bool verbose = false;
    std::string dump_network_dir;
    run->add_option("--manifest", manifest_path, "Run manifest (JSON)")->required();
    run->add_flag("--verbose", verbose, "Print per-iteration energies");
    run->add_option("--dump-network", dump_network_dir,
                    "Write each iteration's flow network as DIMACS into this directory");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark case");
    std::string kind;
    uint64_t seed = 0;
    std::string out_dir;
    int lobes = 5;
    double fraction = 0.2;
    synth->add_option("case", kind, "One of: blob, lshape, star, corrupt, hybrid")->required();
    synth->add_option("--seed", seed, "RNG seed")->required();
    synth->add_option("--out", out_dir, "Output directory")->required();
    synth->add_option("--lobes", lobes, "Star lobes (star case)");
    synth->add_option("--fraction", fraction, "Corrupted foreground fraction (corrupt case)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(manifest_path, verbose, dump_network_dir);
        return synth_command(kind, seed, out_dir, lobes, fraction);
    } catch (const std::exception& e) {
        std::cerr << "mmcut: " << e.what() << "\n";
        return 1;
    }
}
