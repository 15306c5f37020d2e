// aesz: compress, decompress, verify, inspect and evaluate scalar fields.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aesz/eval.hpp"
#include "aesz/pipeline.hpp"

namespace fs = std::filesystem;
using namespace aesz;

namespace {

enum exit_code : int { ok = 0, io_failure = 1, usage_failure = 2, bound_violation = 3 };

struct Options {
    std::string input, output, container, original, weights, precision = "f32";
    std::string dims, eps_list = "1e-1,1e-2,1e-3,1e-4", fraction_out;
    std::optional<double> eps, abs;
    std::size_t block = 0;
    unsigned threads = 1;
    bool no_timing = false;
};

extents parse_dims(const std::string &text) {
    extents out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != item.size() || item.empty() || v == 0) throw usage_error("--dims: expected positive integers, got \"" + text + "\"");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty() || out.size() > 3) throw usage_error("--dims: expected 1 to 3 extents");
    return out;
}

std::vector<double> parse_list(const std::string &text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != item.size() || !(v > 0)) throw usage_error("--eps-list: expected positive numbers, got \"" + text + "\"");
        out.push_back(v);
    }
    if (out.empty()) throw usage_error("--eps-list is empty");
    return out;
}

// A bare file name that does not exist locally is looked up in $AESZ_WEIGHT_DIR.
std::string resolve_weights(const std::string &path) {
    if (path.empty() || fs::exists(path)) return path;
    const char *dir = std::getenv("AESZ_WEIGHT_DIR");
    if (dir && *dir && fs::path(path).is_relative()) {
        const auto candidate = fs::path(dir) / path;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

std::optional<Autoencoder> load_model(const std::string &path) {
    if (path.empty()) return std::nullopt;
    return Autoencoder::load(resolve_weights(path));
}

const BlockModel *ptr(const std::optional<Autoencoder> &m) { return m ? &*m : nullptr; }

template<class T>
int compress_field(const Options &o) {
    const auto field = ingest_field<T>(o.input, parse_dims(o.dims));
    const auto model = load_model(o.weights);
    const auto bound = o.eps ? ErrorBound::relative(*o.eps, field.value_range()) : ErrorBound::absolute(*o.abs, field.value_range());
    CompressOptions co;
    co.threads = o.threads;
    co.block_edge = o.block;
    CompressReport<T> rep;
    rep.keep_reconstruction = true;
    const auto container = compress(field, bound, ptr(model), co, &rep);
    write_file(o.output, container);
    const double cr = static_cast<double>(field.size() * sizeof(T)) / static_cast<double>(container.size());
    std::printf("cr=%.4f psnr=%.4f max_err=%.6g e=%.6g bytes=%zu ae_blocks=%zu/%zu\n", cr, psnr(field, *rep.reconstruction),
                max_abs_error(field, *rep.reconstruction), bound.abs, container.size(), rep.count(predictor_flag::ae), rep.flags.size());
    return ok;
}

int run_compress(const Options &o) {
    if (o.eps.has_value() == o.abs.has_value()) throw usage_error("compress: give exactly one of --eps or --abs");
    return o.precision == "f64" ? compress_field<double>(o) : compress_field<float>(o);
}

int run_decompress(const Options &o) {
    const auto model = load_model(o.weights);
    const auto container = read_file(o.container);
    const auto field = decompress_any(container, ptr(model), {o.threads});
    std::visit([&](const auto &f) { write_field(o.output, f); }, field);
    return ok;
}

int run_verify(const Options &o) {
    const auto model = load_model(o.weights);
    const auto container = read_file(o.container);
    const auto h = read_header(container);
    const auto field = decompress_any(container, ptr(model), {o.threads});
    return std::visit(
        [&](const auto &rec) {
            using T = typename std::decay_t<decltype(rec)>::scalar;
            const auto original = ingest_field<T>(o.original, rec.dims());
            const double err = max_abs_error(original, rec);
            const bool pass = err <= h.e;
            std::printf("max_err=%.9g e=%.9g psnr=%.4f\n", err, h.e, psnr(original, rec));
            std::printf("max_err ≤ e: %s\n", pass ? "PASS" : "FAIL");
            return pass ? ok : bound_violation;
        },
        field);
}

int run_inspect(const Options &o) {
    const auto container = read_file(o.container);
    const auto h = read_header(container);
    std::string dims;
    for (auto d: h.field_dims()) dims += (dims.empty() ? "" : ",") + std::to_string(d);
    std::printf("version=%u\n", h.version);
    std::printf("dims=%s\n", dims.c_str());
    std::printf("precision=%s\n", h.source == precision::f64 ? "f64" : "f32");
    std::printf("block_edge=%u\n", h.block_edge);
    std::printf("latent_size=%u\n", h.latent_size);
    std::printf("epsilon=%.9g\n", h.epsilon);
    std::printf("e=%.9g\n", h.e);
    std::printf("e_latent=%.9g\n", h.e_latent);
    std::printf("vmin=%.9g\n", h.vmin);
    std::printf("vmax=%.9g\n", h.vmax);
    std::printf("alphabet=%u\n", h.alphabet);
    std::printf("blocks=%llu\n", static_cast<unsigned long long>(h.block_count));
    std::printf("ae_blocks=%llu\n", static_cast<unsigned long long>(h.ae_blocks));
    std::printf("mean_blocks=%llu\n", static_cast<unsigned long long>(h.mean_blocks));
    std::printf("unpredictable=%llu\n", static_cast<unsigned long long>(h.unpredictable));
    std::printf("latent_unpredictable=%llu\n", static_cast<unsigned long long>(h.latent_unpredictable));
    std::printf("model_digest=%016llx\n", static_cast<unsigned long long>(h.model_digest));
    std::printf("body_bytes=%llu\n", static_cast<unsigned long long>(h.body_size));
    std::printf("container_bytes=%zu\n", container.size());
    return ok;
}

template<class T>
int eval_field(const Options &o) {
    const auto field = ingest_field<T>(o.input, parse_dims(o.dims));
    const auto model = load_model(o.weights);
    const auto eps = parse_list(o.eps_list);
    SweepOptions so;
    so.timing = !o.no_timing;
    so.threads = o.threads;
    so.compress.threads = o.no_timing ? 1 : o.threads;
    so.compress.block_edge = o.block;
    const auto csv = format_csv(sweep(field, eps, ptr(model), so));
    if (o.output.empty()) std::fputs(csv.c_str(), stdout);
    else write_file(o.output, {reinterpret_cast<const std::uint8_t *>(csv.data()), csv.size()});
    if (!o.fraction_out.empty()) {
        const auto prof = format_fraction_csv(ae_fraction_profile(field, eps, ptr(model), so.compress));
        write_file(o.fraction_out, {reinterpret_cast<const std::uint8_t *>(prof.data()), prof.size()});
    }
    return ok;
}

int run_eval(const Options &o) { return o.precision == "f64" ? eval_field<double>(o) : eval_field<float>(o); }

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Error-bounded lossy compressor for 1-3D scalar fields (autoencoder + Lorenzo prediction)", "aesz"};
    app.require_subcommand(1);
    Options o;

    auto precision = [&](CLI::App *c) {
        c->add_option("--precision", o.precision, "Scalar type of raw files")->check(CLI::IsMember({"f32", "f64"}));
    };
    auto weights = [&](CLI::App *c) {
        c->add_option("-w,--weights", o.weights, "Autoencoder weight file (looked up in $AESZ_WEIGHT_DIR if not found)");
    };
    auto threads = [&](CLI::App *c) { c->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 1024u)); };

    auto *compress_cmd = app.add_subcommand("compress", "Compress a raw field into a container");
    compress_cmd->add_option("-i,--input", o.input, "Raw little-endian field")->required();
    compress_cmd->add_option("--dims", o.dims, "Extents, slowest axis first, e.g. 512,512,512")->required();
    precision(compress_cmd);
    auto *eps = compress_cmd->add_option("--eps", o.eps, "Relative error bound (fraction of the value range)");
    auto *abs = compress_cmd->add_option("--abs", o.abs, "Absolute error bound");
    eps->excludes(abs);
    weights(compress_cmd);
    compress_cmd->add_option("-o,--output", o.output, "Container path")->required();
    compress_cmd->add_option("--block", o.block, "Block edge for Lorenzo-only mode (default 256/32/8 for 1D/2D/3D)");
    threads(compress_cmd);

    auto *decompress_cmd = app.add_subcommand("decompress", "Reconstruct a raw field from a container");
    decompress_cmd->add_option("-c,--container", o.container, "Container path")->required();
    weights(decompress_cmd);
    decompress_cmd->add_option("-o,--output", o.output, "Raw output path")->required();
    threads(decompress_cmd);

    auto *verify_cmd = app.add_subcommand("verify", "Decompress and check the error bound against the original");
    verify_cmd->add_option("-c,--container", o.container, "Container path")->required();
    weights(verify_cmd);
    verify_cmd->add_option("--original", o.original, "Original raw field")->required();
    threads(verify_cmd);

    auto *inspect_cmd = app.add_subcommand("inspect", "Print container header fields as key=value lines");
    inspect_cmd->add_option("-c,--container", o.container, "Container path")->required();

    auto *eval_cmd = app.add_subcommand("eval", "Rate-distortion sweep over error bounds, written as CSV");
    eval_cmd->add_option("-i,--input", o.input, "Raw little-endian field")->required();
    eval_cmd->add_option("--dims", o.dims, "Extents, slowest axis first")->required();
    precision(eval_cmd);
    weights(eval_cmd);
    eval_cmd->add_option("--eps-list", o.eps_list, "Comma-separated relative bounds");
    eval_cmd->add_option("-o,--output", o.output, "CSV path (stdout if omitted)");
    eval_cmd->add_option("--fraction", o.fraction_out, "Also write the AE block fraction per bound to this CSV");
    eval_cmd->add_flag("--no-timing", o.no_timing, "Zero the timing columns so output is byte-stable");
    eval_cmd->add_option("--block", o.block, "Block edge for Lorenzo-only mode");
    threads(eval_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage_failure;
    }

    try {
        if (*compress_cmd) return run_compress(o);
        if (*decompress_cmd) return run_decompress(o);
        if (*verify_cmd) return run_verify(o);
        if (*inspect_cmd) return run_inspect(o);
        return run_eval(o);
    } catch (const usage_error &e) {
        std::fprintf(stderr, "aesz: %s\n", e.what());
        return usage_failure;
    } catch (const model_mismatch &e) {
        std::fprintf(stderr, "aesz: digest mismatch: %s\n", e.what());
        return io_failure;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "aesz: %s\n", e.what());
        return io_failure;
    }
}
