#include "idwattn/data.hpp"

#include "idwattn/error.hpp"
#include "idwattn/io.hpp"
#include "idwattn/rng.hpp"
#include "idwattn/sha256.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

namespace idw {

void Dataset::validate() const {
    if (y.size() != x.rows()) throw ShapeError("Dataset: label count != row count");
    if (num_classes == 0) throw ValueError("Dataset: num_classes must be > 0");
    x.require_finite("dataset features");
    for (int label : y)
        if (label < 0 || std::size_t(label) >= num_classes)
            throw ValueError("Dataset: label " + std::to_string(label) + " outside [0, " +
                             std::to_string(num_classes) + ")");
}

std::array<double, 2> moons_point(int label, double t) {
    if (label == 0) return {std::cos(t), std::sin(t)};
    if (label == 1) return {1.0 - std::cos(t), 0.5 - std::sin(t)};
    throw ValueError("moons_point: label must be 0 or 1");
}

namespace {

Dataset moons_split(std::size_t n, double noise_std, Rng rng) {
    Dataset ds;
    ds.num_classes = 2;
    ds.x = Matrix(n, 2);
    ds.y.resize(n);
    const std::size_t n0 = (n + 1) / 2; // class 0 takes the rounding extra
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i < n0 ? 0 : 1;
        const double t = rng.uniform() * std::numbers::pi;
        const auto [px, py] = moons_point(label, t);
        ds.x(i, 0) = px + noise_std * rng.normal();
        ds.x(i, 1) = py + noise_std * rng.normal();
        ds.y[i] = label;
    }
    return ds;
}

} // namespace

std::pair<Dataset, Dataset> gen_moons(const MoonsConfig& cfg) {
    if (cfg.n_train == 0 || cfg.n_test == 0) throw ValueError("gen_moons: counts must be >= 1");
    if (!(cfg.noise_std >= 0.0)) throw ValueError("gen_moons: noise_std must be >= 0");
    Rng master(cfg.seed);
    Dataset train = moons_split(cfg.n_train, cfg.noise_std, master.stream("moons-train"));
    Dataset test = moons_split(cfg.n_test, cfg.noise_std, master.stream("moons-test"));
    return {std::move(train), std::move(test)};
}

namespace {

std::uint32_t read_be32(const unsigned char* p) {
    return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[2]) << 8 |
           std::uint32_t(p[3]);
}

void append_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back((unsigned char)(v >> 24));
    out.push_back((unsigned char)(v >> 16));
    out.push_back((unsigned char)(v >> 8));
    out.push_back((unsigned char)v);
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

} // namespace

IdxFile parse_idx(std::span<const unsigned char> bytes) {
    if (bytes.size() < 4) throw FormatError("idx: stream shorter than the 4-byte magic");
    const std::uint32_t magic = read_be32(bytes.data());
    std::size_t ndims = 0;
    if (magic == 0x00000803u) ndims = 3;
    else if (magic == 0x00000801u) ndims = 1;
    else throw FormatError("idx: bad magic " + hex32(magic) + " at offset 0");

    if (bytes.size() < 4 + 4 * ndims)
        throw FormatError("idx: truncated header, need " + std::to_string(4 + 4 * ndims) +
                          " bytes, got " + std::to_string(bytes.size()));
    IdxFile file;
    file.header.magic = magic;
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < ndims; ++i) {
        const std::uint32_t dim = read_be32(bytes.data() + 4 + 4 * i);
        file.header.dims.push_back(dim);
        total *= dim;
        if (total > (std::uint64_t(1) << 40))
            throw FormatError("idx: dimension product overflows sane bounds at dim " +
                              std::to_string(i));
    }
    const std::size_t header_len = 4 + 4 * ndims;
    const std::size_t have = bytes.size() - header_len;
    if (have != total)
        throw FormatError("idx: payload is " + std::to_string(have) + " bytes at offset " +
                          std::to_string(header_len) + ", dims require " + std::to_string(total));
    file.payload.assign(bytes.begin() + header_len, bytes.end());
    return file;
}

std::vector<unsigned char> serialize_idx(const IdxFile& file) {
    std::vector<unsigned char> out;
    append_be32(out, file.header.magic);
    for (std::uint32_t dim : file.header.dims) append_be32(out, dim);
    out.insert(out.end(), file.payload.begin(), file.payload.end());
    return out;
}

IdxFile read_idx_file(const std::string& path) {
    const auto bytes = read_binary_file(path);
    try {
        return parse_idx(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

const std::array<const char*, 4> kMnistFiles = {
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
};

namespace {

void verify_checksums_if_present(const std::string& dir) {
    const std::string manifest = dir + "/mnist.sha256";
    if (!std::filesystem::exists(manifest)) return;
    for (const std::string& line : split(read_text_file(manifest), '\n')) {
        if (line.empty()) continue;
        // sha256sum format: "<64 hex>  <filename>"
        if (line.size() < 66) throw FormatError(manifest + ": malformed line '" + line + "'");
        const std::string want = line.substr(0, 64);
        std::size_t name_at = 64;
        while (name_at < line.size() && (line[name_at] == ' ' || line[name_at] == '*')) ++name_at;
        const std::string name = line.substr(name_at);
        const std::string got = sha256_file_hex(dir + "/" + name);
        if (got != want)
            throw FormatError(dir + "/" + name + ": sha256 mismatch (expected " + want + ", got " +
                              got + ")");
    }
}

Dataset mnist_split(const std::string& dir, const char* images_name, const char* labels_name) {
    const IdxFile images = read_idx_file(dir + "/" + images_name);
    const IdxFile labels = read_idx_file(dir + "/" + labels_name);
    if (images.header.magic != 0x00000803u)
        throw FormatError(std::string(images_name) + ": expected image magic");
    if (labels.header.magic != 0x00000801u)
        throw FormatError(std::string(labels_name) + ": expected label magic");
    const std::size_t n = images.header.dims[0];
    if (labels.header.dims[0] != n)
        throw FormatError(dir + ": " + std::to_string(n) + " images but " +
                          std::to_string(labels.header.dims[0]) + " labels");
    const std::size_t d = std::size_t(images.header.dims[1]) * images.header.dims[2];
    Dataset ds;
    ds.num_classes = 10;
    ds.x = Matrix(n, d);
    ds.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j)
            ds.x(i, j) = double(images.payload[i * d + j]) / 255.0;
        ds.y[i] = labels.payload[i];
    }
    ds.validate();
    return ds;
}

} // namespace

std::pair<Dataset, Dataset> load_mnist(const std::string& dir) {
    for (const char* name : kMnistFiles)
        if (!std::filesystem::exists(dir + "/" + name))
            throw IoError("missing MNIST file " + dir + "/" + name);
    verify_checksums_if_present(dir);
    Dataset train = mnist_split(dir, kMnistFiles[0], kMnistFiles[1]);
    Dataset test = mnist_split(dir, kMnistFiles[2], kMnistFiles[3]);
    return {std::move(train), std::move(test)};
}

Dataset subset(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    if (n > ds.size())
        throw ValueError("subset: asked for " + std::to_string(n) + " of " +
                         std::to_string(ds.size()));
    const auto perm = Rng(seed).stream("subset").permutation(ds.size());
    Dataset out;
    out.num_classes = ds.num_classes;
    out.x = Matrix(n, ds.dim());
    out.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = perm[i];
        for (std::size_t j = 0; j < ds.dim(); ++j) out.x(i, j) = ds.x(src, j);
        out.y[i] = ds.y[src];
    }
    return out;
}

void write_points_csv(const std::string& path, const Dataset& ds) {
    if (ds.dim() != 2) throw ShapeError("write_points_csv: expects 2-D features");
    std::string text = "x1,x2,label\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        text += fmt_double(ds.x(i, 0));
        text += ',';
        text += fmt_double(ds.x(i, 1));
        text += ',';
        text += std::to_string(ds.y[i]);
        text += '\n';
    }
    write_text_file(path, text);
}

Dataset read_points_csv(const std::string& path, std::size_t num_classes) {
    const auto lines = split(read_text_file(path), '\n');
    if (lines.empty() || lines[0] != "x1,x2,label")
        throw FormatError(path + ": expected header 'x1,x2,label'");
    std::vector<std::array<double, 2>> pts;
    std::vector<int> labels;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto cells = split(lines[i], ',');
        if (cells.size() != 3)
            throw FormatError(path + ":" + std::to_string(i + 1) + ": expected 3 cells");
        pts.push_back({parse_double(cells[0]), parse_double(cells[1])});
        try {
            labels.push_back(std::stoi(cells[2]));
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(i + 1) + ": bad label '" + cells[2] +
                              "'");
        }
    }
    Dataset ds;
    ds.num_classes = num_classes;
    ds.x = Matrix(pts.size(), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ds.x(i, 0) = pts[i][0];
        ds.x(i, 1) = pts[i][1];
    }
    ds.y = std::move(labels);
    ds.validate();
    return ds;
}

} // namespace idw
