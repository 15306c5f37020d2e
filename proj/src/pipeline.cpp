#include "aesz/pipeline.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "aesz/entropy.hpp"
#include "aesz/parallel.hpp"

namespace aesz {

namespace {

constexpr std::string_view container_magic = "AESZC";

std::size_t default_edge(std::size_t rank) { return rank == 1 ? 256 : rank == 2 ? 32 : 8; }

void put_section(byte_writer &out, const section &s) {
    out.put<std::uint64_t>(s.offset);
    out.put<std::uint64_t>(s.length);
}

section get_section(byte_reader &in) {
    section s;
    s.offset = in.get<std::uint64_t>();
    s.length = in.get<std::uint64_t>();
    return s;
}

template<class T>
struct block_result {
    predictor_flag flag = predictor_flag::lorenzo_classic;
    T mean{0};
    LorenzoEncoded<T> encoded;
    double loss_ae = std::numeric_limits<double>::quiet_NaN();
    double loss_lorenzo = 0;
};

struct body_view {
    bytes body;
    std::span<const std::uint8_t> slice(const section &s) const { return {body.data() + s.offset, static_cast<std::size_t>(s.length)}; }
};

body_view open_body(std::span<const std::uint8_t> container, ContainerHeader &header) {
    byte_reader in(container);
    header = ContainerHeader::read(in);
    if (in.remaining() != header.payload_size) throw format_error("container: payload size mismatch");
    body_view v{backend_decode(in.get_bytes(in.remaining()))};
    if (v.body.size() != header.body_size) throw format_error("container: body size mismatch");
    // Sections are contiguous, in order, and cover the body exactly.
    std::uint64_t at = 0;
    for (const section *s: {&header.flags, &header.latents, &header.means, &header.codes, &header.values}) {
        if (s->offset != at || s->length > header.body_size - at) throw format_error("container: inconsistent section offsets");
        at += s->length;
    }
    if (at != header.body_size) throw format_error("container: sections do not cover the body");
    return v;
}

void check_header(const ContainerHeader &h) {
    if (h.rank < 1 || h.rank > 3) throw format_error("container: bad rank");
    for (std::size_t k = 0; k < 3; ++k)
        if ((k < h.rank) != (h.dims[k] != 0)) throw format_error("container: bad dims");
    if (h.block_edge < 2) throw format_error("container: bad block edge");
    if (h.alphabet < 4 || h.alphabet % 2) throw format_error("container: bad alphabet");
    if (h.source != precision::f32 && h.source != precision::f64) throw format_error("container: bad precision");
    const BlockGrid grid(h.field_dims(), h.block_edge);
    if (grid.block_count() != h.block_count) throw format_error("container: block count mismatch");
    if (h.ae_blocks + h.mean_blocks > h.block_count) throw format_error("container: predictor counts exceed block count");
    if (!(h.e >= 0) || !std::isfinite(h.e)) throw format_error("container: bad error bound");
}

}  // namespace

std::vector<std::uint8_t> pack_flags(std::span<const predictor_flag> flags) {
    std::vector<std::uint8_t> out((flags.size() + 3) / 4, 0);
    for (std::size_t i = 0; i < flags.size(); ++i)
        out[i / 4] |= static_cast<std::uint8_t>(static_cast<unsigned>(flags[i]) << (2 * (i % 4)));
    return out;
}

std::vector<predictor_flag> unpack_flags(std::span<const std::uint8_t> packed, std::size_t count) {
    if (packed.size() != (count + 3) / 4) throw format_error("flag bitmap size mismatch");
    std::vector<predictor_flag> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned v = (packed[i / 4] >> (2 * (i % 4))) & 3u;
        if (v > 2) throw format_error("flag bitmap: invalid predictor flag");
        out[i] = static_cast<predictor_flag>(v);
    }
    if (count % 4 && packed.back() >> (2 * (count % 4))) throw format_error("flag bitmap: nonzero padding");
    return out;
}

void ContainerHeader::write(byte_writer &out) const {
    out.put_magic(container_magic);
    out.put<std::uint16_t>(version);
    out.put<std::uint8_t>(rank);
    for (auto d: dims) out.put<std::uint64_t>(d);
    out.put<std::uint16_t>(block_edge);
    out.put<std::uint16_t>(latent_size);
    out.put<double>(epsilon);
    out.put<double>(e);
    out.put<double>(e_latent);
    out.put<double>(vmin);
    out.put<double>(vmax);
    out.put<std::uint8_t>(static_cast<std::uint8_t>(source));
    out.put<std::uint32_t>(alphabet);
    out.put<std::uint64_t>(block_count);
    out.put<std::uint64_t>(ae_blocks);
    out.put<std::uint64_t>(mean_blocks);
    out.put<std::uint64_t>(unpredictable);
    out.put<std::uint64_t>(latent_unpredictable);
    out.put<std::uint64_t>(model_digest);
    out.put<std::uint64_t>(body_size);
    for (const section *s: {&flags, &latents, &means, &codes, &values}) put_section(out, *s);
    out.put<std::uint64_t>(payload_size);
}

ContainerHeader ContainerHeader::read(byte_reader &in) {
    ContainerHeader h;
    in.expect_magic(container_magic);
    h.version = in.get<std::uint16_t>();
    if (h.version != current_version) throw format_error("container: unsupported version");
    h.rank = in.get<std::uint8_t>();
    for (auto &d: h.dims) d = in.get<std::uint64_t>();
    h.block_edge = in.get<std::uint16_t>();
    h.latent_size = in.get<std::uint16_t>();
    h.epsilon = in.get<double>();
    h.e = in.get<double>();
    h.e_latent = in.get<double>();
    h.vmin = in.get<double>();
    h.vmax = in.get<double>();
    h.source = static_cast<precision>(in.get<std::uint8_t>());
    h.alphabet = in.get<std::uint32_t>();
    h.block_count = in.get<std::uint64_t>();
    h.ae_blocks = in.get<std::uint64_t>();
    h.mean_blocks = in.get<std::uint64_t>();
    h.unpredictable = in.get<std::uint64_t>();
    h.latent_unpredictable = in.get<std::uint64_t>();
    h.model_digest = in.get<std::uint64_t>();
    h.body_size = in.get<std::uint64_t>();
    for (section *s: {&h.flags, &h.latents, &h.means, &h.codes, &h.values}) *s = get_section(in);
    h.payload_size = in.get<std::uint64_t>();
    check_header(h);
    return h;
}

ContainerHeader read_header(std::span<const std::uint8_t> container) {
    byte_reader in(container);
    return ContainerHeader::read(in);
}

template<class T>
bytes compress(const Field<T> &field, const ErrorBound &bound, const BlockModel *model, const CompressOptions &options,
               CompressReport<T> *report) {
    const auto rank = field.rank();
    if (model && model->dimensionality() != static_cast<int>(rank))
        throw usage_error("model dimensionality does not match the field");
    std::size_t edge = model ? model->block_edge() : (options.block_edge ? options.block_edge : default_edge(rank));
    if (model && options.block_edge && options.block_edge != edge) throw usage_error("block edge differs from the model's");
    if (edge > 65535) throw usage_error("block edge too large");
    if (!(bound.abs >= 0) || !std::isfinite(bound.abs)) throw usage_error("invalid error bound");

    const BlockGrid grid(field.dims(), edge);
    const auto nb = grid.block_count();
    const T vmin = field.vmin(), vmax = field.vmax();
    const bool use_ae = model && vmax > vmin;
    const QuantizerConfig q = bound.abs > 0 ? QuantizerConfig(bound.abs, options.alphabet) : lossless_quantizer();
    const double epsilon = bound.epsilon > 0 ? bound.epsilon : (field.value_range() > 0 ? bound.abs / field.value_range() : 0);

    // Pass 1: latents of every complete block, which fix the latent bound.
    std::vector<std::size_t> candidate_of(nb, SIZE_MAX);
    std::vector<std::size_t> candidates;
    if (use_ae)
        for (std::size_t b = 0; b < nb; ++b)
            if (grid.complete(grid.extent_at(grid.origin(b)))) {
                candidate_of[b] = candidates.size();
                candidates.push_back(b);
            }
    const auto d = model ? model->latent_size() : 0;
    Eigen::MatrixXf latents(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(candidates.size()));
    parallel_for(candidates.size(), options.threads, [&](std::size_t c) {
        const auto block = grid.extract(field.span(), candidates[c]);
        const Eigen::VectorXf x = ae_normalized_input(block, vmin, vmax);
        const Eigen::VectorXf z = model->encode({x.data(), static_cast<std::size_t>(x.size())});
        if (static_cast<std::size_t>(z.size()) != d) throw std::logic_error("model returned a latent of the wrong size");
        latents.col(static_cast<Eigen::Index>(c)) = z;
    });
    double zmin = 0, zmax = 0, e_latent = 0;
    if (!candidates.empty()) {
        zmin = latents.minCoeff();
        zmax = latents.maxCoeff();
        e_latent = latent_bound(epsilon > 0 ? epsilon : 1.0, zmin, zmax);
    }
    const QuantizerConfig q_latent = e_latent > 0 ? QuantizerConfig(e_latent, options.alphabet) : QuantizerConfig(1.0, options.alphabet);

    // Pass 2: predictor selection and quantization, independently per block.
    std::vector<block_result<T>> results(nb);
    std::vector<Eigen::VectorXf> decoded_latents(nb);
    parallel_for(nb, options.threads, [&](std::size_t b) {
        const auto block = grid.extract(field.span(), b);
        auto &r = results[b];
        const auto preview = lorenzo_preview(block);
        r.loss_lorenzo = preview.l1;
        r.flag = select_predictor(std::numeric_limits<double>::infinity(), preview.l1, preview.variant.kind);
        array_t<T> ae_pred;
        if (candidate_of[b] != SIZE_MAX) {
            const Eigen::VectorXf zd = decode_latent_vector(latents.col(static_cast<Eigen::Index>(candidate_of[b])), q_latent);
            ae_pred = ae_predict<T>(*model, zd, vmin, vmax);
            r.loss_ae = (block.data.template cast<double>() - ae_pred.template cast<double>()).abs().sum();
            r.flag = select_predictor(r.loss_ae, preview.l1, preview.variant.kind);
        }
        if (r.flag == predictor_flag::ae) {
            r.encoded = quantize_against(block.data, ae_pred, q);
        } else {
            r.mean = preview.variant.mean;
            r.encoded = lorenzo_compress_block(block, preview.variant, q);
        }
    });

    // Sequential assembly in block order.
    ContainerHeader h;
    h.rank = static_cast<std::uint8_t>(rank);
    for (std::size_t k = 0; k < rank; ++k) h.dims[k] = field.dims()[k];
    h.block_edge = static_cast<std::uint16_t>(edge);
    h.latent_size = static_cast<std::uint16_t>(d);
    h.epsilon = epsilon;
    h.e = bound.abs;
    h.e_latent = e_latent;
    h.vmin = vmin;
    h.vmax = vmax;
    h.source = precision_of<T>();
    h.alphabet = options.alphabet;
    h.block_count = nb;
    h.model_digest = model ? model->digest() : 0;

    std::vector<predictor_flag> flags(nb);
    LatentBuffer buffer;
    buffer.zmin = zmin;
    buffer.zmax = zmax;
    buffer.e_latent = e_latent;
    std::vector<std::size_t> ae_columns;
    std::vector<T> means, unpredictable;
    std::vector<std::uint32_t> codes;
    codes.reserve(field.size());
    for (std::size_t b = 0; b < nb; ++b) {
        const auto &r = results[b];
        flags[b] = r.flag;
        if (r.flag == predictor_flag::ae) ae_columns.push_back(candidate_of[b]);
        if (r.flag == predictor_flag::lorenzo_mean) means.push_back(r.mean);
        codes.insert(codes.end(), r.encoded.codes.begin(), r.encoded.codes.end());
        unpredictable.insert(unpredictable.end(), r.encoded.unpredictable.begin(), r.encoded.unpredictable.end());
    }
    buffer.vectors.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(ae_columns.size()));
    for (std::size_t i = 0; i < ae_columns.size(); ++i)
        buffer.vectors.col(static_cast<Eigen::Index>(i)) = latents.col(static_cast<Eigen::Index>(ae_columns[i]));
    h.ae_blocks = ae_columns.size();
    h.mean_blocks = means.size();
    h.unpredictable = unpredictable.size();
    h.latent_unpredictable = 0;
    for (Eigen::Index i = 0; i < buffer.vectors.size(); ++i)
        if (!quantize<float>(buffer.vectors.data()[i], 0.0f, q_latent).predictable()) ++h.latent_unpredictable;

    byte_writer body;
    auto add = [&](section &s, auto &&writer) {
        s.offset = body.size();
        writer();
        s.length = body.size() - s.offset;
    };
    add(h.flags, [&] { body.put_bytes(pack_flags(flags)); });
    add(h.latents, [&] { body.put_bytes(compress_latents(buffer, q_latent)); });
    add(h.means, [&] { body.put_array<T>(means); });
    add(h.codes, [&] { body.put_bytes(huffman_encode(codes, options.alphabet)); });
    add(h.values, [&] { body.put_array<T>(unpredictable); });
    h.body_size = body.size();
    const auto payload = backend_encode(body.buffer());
    h.payload_size = payload.size();

    byte_writer out;
    h.write(out);
    out.put_bytes(payload);

    if (report) {
        report->flags = flags;
        report->loss_ae.resize(nb);
        report->loss_lorenzo.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            report->loss_ae[b] = results[b].loss_ae;
            report->loss_lorenzo[b] = results[b].loss_lorenzo;
        }
        report->unpredictable = unpredictable.size();
        report->e_latent = e_latent;
        if (report->keep_reconstruction) {
            array_t<T> rec(static_cast<Eigen::Index>(field.size()));
            std::span<T> rs(rec.data(), field.size());
            for (std::size_t b = 0; b < nb; ++b) {
                const auto origin = grid.origin(b);
                const auto &e = results[b].encoded.reconstructed;
                grid.insert<T>(rs, origin, grid.extent_at(origin), {e.data(), static_cast<std::size_t>(e.size())});
            }
            report->reconstruction.emplace(field.dims(), std::move(rec));
        }
    }
    return out.take();
}

template<class T>
ContainerSections<T> read_sections(std::span<const std::uint8_t> container) {
    ContainerSections<T> s;
    auto v = open_body(container, s.header);
    const auto &h = s.header;
    if (h.source != precision_of<T>()) throw format_error("container precision differs from the requested scalar type");
    s.flags = unpack_flags(v.slice(h.flags), h.block_count);
    s.latents = decompress_latents(v.slice(h.latents), h.ae_blocks, h.latent_size, h.alphabet);
    if (h.means.length != h.mean_blocks * sizeof(T)) throw format_error("container: means section size mismatch");
    byte_reader means(v.slice(h.means));
    s.means = means.get_array<T>(h.mean_blocks);
    s.codes = huffman_decode(v.slice(h.codes));
    if (h.values.length != h.unpredictable * sizeof(T)) throw format_error("container: unpredictable section size mismatch");
    byte_reader values(v.slice(h.values));
    s.unpredictable = values.get_array<T>(h.unpredictable);
    return s;
}

template<class T>
Field<T> decompress(std::span<const std::uint8_t> container, const BlockModel *model, const DecompressOptions &options) {
    const auto s = read_sections<T>(container);
    const auto &h = s.header;
    const auto dims = h.field_dims();
    const BlockGrid grid(dims, h.block_edge);
    const auto nb = grid.block_count();

    if (model && h.model_digest != 0 && model->digest() != h.model_digest)
        throw model_mismatch("weight digest does not match the container");
    if (h.ae_blocks > 0) {
        if (!model) throw model_mismatch("container has AE-predicted blocks; a weight file is required");
        if (model->block_edge() != h.block_edge || model->latent_size() != h.latent_size ||
            model->dimensionality() != static_cast<int>(h.rank))
            throw model_mismatch("model configuration does not match the container");
    }
    if (s.codes.size() != product(dims)) throw format_error("container: code count does not match field size");

    std::size_t ae = 0, mean = 0;
    std::vector<std::size_t> latent_col(nb), mean_idx(nb), code_at(nb + 1, 0), unpred_at(nb + 1, 0);
    for (std::size_t b = 0; b < nb; ++b) {
        const auto extent = grid.extent_at(grid.origin(b));
        const auto n = product(extent);
        if (s.flags[b] == predictor_flag::ae) {
            if (!grid.complete(extent)) throw format_error("container: AE flag on an incomplete block");
            latent_col[b] = ae++;
        }
        if (s.flags[b] == predictor_flag::lorenzo_mean) mean_idx[b] = mean++;
        code_at[b + 1] = code_at[b] + n;
        const auto sentinels = std::count(s.codes.begin() + static_cast<std::ptrdiff_t>(code_at[b]),
                                          s.codes.begin() + static_cast<std::ptrdiff_t>(code_at[b + 1]), QuantizerConfig::sentinel);
        unpred_at[b + 1] = unpred_at[b] + static_cast<std::size_t>(sentinels);
    }
    if (ae != h.ae_blocks || ae != s.latents.count()) throw format_error("container: AE flag count does not match latent count");
    if (mean != h.mean_blocks) throw format_error("container: mean flag count does not match means section");
    if (unpred_at[nb] != s.unpredictable.size()) throw format_error("container: unpredictable count mismatch");

    const QuantizerConfig q = h.e > 0 ? QuantizerConfig(h.e, h.alphabet) : lossless_quantizer();
    const T vmin = static_cast<T>(h.vmin), vmax = static_cast<T>(h.vmax);
    array_t<T> values(static_cast<Eigen::Index>(product(dims)));
    std::span<T> out(values.data(), static_cast<std::size_t>(values.size()));
    parallel_for(nb, options.threads, [&](std::size_t b) {
        const auto origin = grid.origin(b);
        const auto extent = grid.extent_at(origin);
        const std::span<const std::uint32_t> codes(s.codes.data() + code_at[b], code_at[b + 1] - code_at[b]);
        unpredictable_cursor<T> cursor(std::span<const T>(s.unpredictable.data() + unpred_at[b], unpred_at[b + 1] - unpred_at[b]));
        array_t<T> rec;
        switch (s.flags[b]) {
            case predictor_flag::ae: {
                const Eigen::VectorXf zd = s.latents.vectors.col(static_cast<Eigen::Index>(latent_col[b]));
                rec = dequantize_against(codes, cursor, ae_predict<T>(*model, zd, vmin, vmax), q);
                break;
            }
            case predictor_flag::lorenzo_mean:
                rec = lorenzo_decompress_block(codes, cursor, LorenzoVariant<T>::with_mean(s.means[mean_idx[b]]), q, extent);
                break;
            case predictor_flag::lorenzo_classic:
                rec = lorenzo_decompress_block(codes, cursor, LorenzoVariant<T>::classic(), q, extent);
                break;
        }
        grid.insert<T>(out, origin, extent, {rec.data(), static_cast<std::size_t>(rec.size())});
    });
    if (!values.isFinite().all()) throw format_error("container: reconstruction is not finite");
    return Field<T>(dims, std::move(values));
}

any_field decompress_any(std::span<const std::uint8_t> container, const BlockModel *model, const DecompressOptions &options) {
    const auto h = read_header(container);
    if (h.source == precision::f64) return decompress<double>(container, model, options);
    return decompress<float>(container, model, options);
}

bytes replace_flags(std::span<const std::uint8_t> container, std::span<const predictor_flag> flags) {
    ContainerHeader h;
    auto v = open_body(container, h);
    const auto packed = pack_flags(flags);
    if (packed.size() != h.flags.length) throw usage_error("flag count does not match the container");
    std::copy(packed.begin(), packed.end(), v.body.begin() + static_cast<std::ptrdiff_t>(h.flags.offset));
    const auto payload = backend_encode(v.body);
    h.payload_size = payload.size();
    byte_writer out;
    h.write(out);
    out.put_bytes(payload);
    return out.take();
}

#define AESZ_INSTANTIATE(T)                                                                                             \
    template bytes compress<T>(const Field<T> &, const ErrorBound &, const BlockModel *, const CompressOptions &,       \
                               CompressReport<T> *);                                                                    \
    template Field<T> decompress<T>(std::span<const std::uint8_t>, const BlockModel *, const DecompressOptions &);     \
    template ContainerSections<T> read_sections<T>(std::span<const std::uint8_t>);

AESZ_INSTANTIATE(float)
AESZ_INSTANTIATE(double)

#undef AESZ_INSTANTIATE

}  // namespace aesz
