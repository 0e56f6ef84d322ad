#include "idwattn/model.hpp"

#include "idwattn/error.hpp"
#include "idwattn/io.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace idw {

Matrix PrototypeNet::forward(const Matrix& x, Cache* cache) const {
    AttentionOut att = attend(kind, x, keys, values);
    Matrix logits = att.output;
    if (cache) {
        cache->input = x;
        cache->att = std::move(att);
    }
    return logits;
}

std::vector<Matrix> PrototypeNet::backward(const Cache& cache, const Matrix& grad_logits) const {
    if (cache.input.cols() != dim() || cache.att.weights.cols() != prototypes() ||
        cache.att.weights.rows() != cache.input.rows())
        throw ShapeError("PrototypeNet::backward: stale or mismatched forward cache");
    AttendGrads g = attend_backward(kind, cache.input, keys, values, cache.att, grad_logits);
    return {std::move(g.keys), std::move(g.values)};
}

Matrix FcReluNet::forward(const Matrix& x, Cache* cache) const {
    if (x.cols() != dim())
        throw ShapeError("FcReluNet::forward: input dim " + std::to_string(x.cols()) + " vs " +
                         std::to_string(dim()));
    Matrix pre = matmul(x, w1);
    for (std::size_t r = 0; r < pre.rows(); ++r)
        for (std::size_t c = 0; c < pre.cols(); ++c) pre(r, c) += b1(0, c);
    Matrix hid = pre;
    for (std::size_t i = 0; i < hid.size(); ++i)
        if (hid.data()[i] < 0.0) hid.data()[i] = 0.0;
    Matrix logits = matmul(hid, w2);
    for (std::size_t r = 0; r < logits.rows(); ++r)
        for (std::size_t c = 0; c < logits.cols(); ++c) logits(r, c) += b2(0, c);
    logits.require_finite("fc logits");
    if (cache) {
        cache->input = x;
        cache->pre_act = std::move(pre);
        cache->hidden = std::move(hid);
    }
    return logits;
}

std::vector<Matrix> FcReluNet::backward(const Cache& cache, const Matrix& grad_logits) const {
    if (cache.input.cols() != dim() || cache.hidden.cols() != hidden() ||
        cache.hidden.rows() != cache.input.rows() || grad_logits.cols() != classes() ||
        grad_logits.rows() != cache.input.rows())
        throw ShapeError("FcReluNet::backward: stale or mismatched forward cache");

    Matrix gb2(1, classes());
    for (std::size_t r = 0; r < grad_logits.rows(); ++r)
        for (std::size_t c = 0; c < grad_logits.cols(); ++c) gb2(0, c) += grad_logits(r, c);
    Matrix gw2 = matmul(cache.hidden.transposed(), grad_logits);

    Matrix ghid = matmul(grad_logits, w2.transposed());
    for (std::size_t i = 0; i < ghid.size(); ++i)
        if (cache.pre_act.data()[i] <= 0.0) ghid.data()[i] = 0.0;

    Matrix gb1(1, hidden());
    for (std::size_t r = 0; r < ghid.rows(); ++r)
        for (std::size_t c = 0; c < ghid.cols(); ++c) gb1(0, c) += ghid(r, c);
    Matrix gw1 = matmul(cache.input.transposed(), ghid);

    return {std::move(gw1), std::move(gb1), std::move(gw2), std::move(gb2)};
}

PrototypeNet init_prototype_net(const Matrix& train_x, std::size_t classes,
                                std::size_t prototypes, const ScoreKind& kind, Rng& rng) {
    if (train_x.rows() == 0) throw ValueError("init_prototype_net: empty training set");
    if (prototypes == 0) throw ValueError("init_prototype_net: need at least one prototype");
    if (classes == 0) throw ValueError("init_prototype_net: need at least one class");
    kind.validate();
    const Matrix mean = col_mean(train_x);
    Matrix sd = col_std(train_x);
    for (std::size_t c = 0; c < sd.cols(); ++c) sd(0, c) *= 0.1;
    PrototypeNet net;
    net.kind = kind;
    net.keys = gaussian_matrix(prototypes, train_x.cols(), mean, sd, rng);
    net.values = Matrix(prototypes, classes);
    return net;
}

FcReluNet init_fc_relu_net(std::size_t dim, std::size_t hidden, std::size_t classes, Rng& rng) {
    if (dim == 0 || hidden == 0 || classes == 0)
        throw ValueError("init_fc_relu_net: zero-sized layer");
    FcReluNet net;
    net.w1 = gaussian_matrix(dim, hidden, Matrix(1, hidden),
                             Matrix(1, hidden, 1.0 / std::sqrt(double(dim))), rng);
    net.b1 = Matrix(1, hidden);
    net.w2 = gaussian_matrix(hidden, classes, Matrix(1, classes),
                             Matrix(1, classes, 1.0 / std::sqrt(double(hidden))), rng);
    net.b2 = Matrix(1, classes);
    return net;
}

void ModelMeta::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries)
        if (k == key) {
            v = value;
            return;
        }
    entries.emplace_back(key, value);
}

const std::string* ModelMeta::get(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

namespace {

constexpr std::string_view kMagic = "idwattn-model";
constexpr int kSchemaVersion = 1;

std::size_t parse_size_field(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw FormatError("");
        return std::size_t(v);
    } catch (const std::exception&) {
        throw FormatError(std::string("bad ") + what + " in model header: '" + s + "'");
    }
}

int parse_int_field(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw FormatError("");
        return v;
    } catch (const std::exception&) {
        throw FormatError(std::string("bad ") + what + " in model header: '" + s + "'");
    }
}

void append_tensor_decl(std::string& header, std::string_view name, const Matrix& m) {
    header += "tensor ";
    header += name;
    header += ' ';
    header += std::to_string(m.rows());
    header += ' ';
    header += std::to_string(m.cols());
    header += '\n';
}

void append_payload(std::vector<unsigned char>& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) append_le_double(out, m.data()[i]);
}

struct HeaderParser {
    std::vector<std::string> lines;
    std::size_t pos = 0;

    const std::string& peek() const {
        if (pos >= lines.size()) throw FormatError("model header ended early");
        return lines[pos];
    }
    std::string next() {
        std::string line = peek();
        ++pos;
        return line;
    }
    bool done() const { return pos >= lines.size(); }
};

Matrix take_tensor(const std::string& decl, std::string_view want_name,
                   const std::vector<unsigned char>& bytes, std::size_t& offset) {
    const auto parts = split(decl, ' ');
    if (parts.size() != 4 || parts[0] != "tensor")
        throw FormatError("bad tensor declaration: '" + decl + "'");
    if (parts[1] != want_name)
        throw ShapeError("expected tensor '" + std::string(want_name) + "', found '" + parts[1] +
                         "'");
    const std::size_t rows = parse_size_field(parts[2], "tensor rows");
    const std::size_t cols = parse_size_field(parts[3], "tensor cols");
    Matrix m(rows, cols);
    const std::size_t need = rows * cols * 8;
    if (offset + need > bytes.size())
        throw FormatError("model payload truncated: tensor '" + parts[1] + "' needs " +
                          std::to_string(need) + " bytes at offset " + std::to_string(offset) +
                          ", file has " + std::to_string(bytes.size() - offset));
    for (std::size_t i = 0; i < rows * cols; ++i)
        m.data()[i] = read_le_double(bytes.data() + offset + i * 8);
    offset += need;
    return m;
}

} // namespace

std::vector<unsigned char> serialize_model(const AnyNet& net, const ModelMeta& meta) {
    std::string header;
    header += kMagic;
    header += " v";
    header += std::to_string(kSchemaVersion);
    header += '\n';

    if (const auto* p = std::get_if<PrototypeNet>(&net)) {
        header += "arch prototype\n";
        header += "score ";
        header += p->kind.name();
        header += '\n';
        header += "p " + fmt_double(p->kind.p) + '\n';
        header += "eps " + fmt_double(p->kind.eps) + '\n';
        header += "sigma " + fmt_double(p->kind.sigma) + '\n';
    } else {
        header += "arch fcrelu\n";
    }
    for (const auto& [k, v] : meta.entries) header += "meta " + k + ' ' + v + '\n';
    for (const auto& a : meta.augments)
        header += "augment " + std::to_string(a.target_class) + ' ' + fmt_double(a.eta) + ' ' +
                  fmt_double(a.margin) + ' ' + std::to_string(a.pre_class) + ' ' +
                  std::to_string(a.post_class) + '\n';

    if (const auto* p = std::get_if<PrototypeNet>(&net)) {
        append_tensor_decl(header, "keys", p->keys);
        append_tensor_decl(header, "values", p->values);
    } else {
        const auto& f = std::get<FcReluNet>(net);
        append_tensor_decl(header, "w1", f.w1);
        append_tensor_decl(header, "b1", f.b1);
        append_tensor_decl(header, "w2", f.w2);
        append_tensor_decl(header, "b2", f.b2);
    }
    header += "payload\n";

    std::vector<unsigned char> out(header.begin(), header.end());
    if (const auto* p = std::get_if<PrototypeNet>(&net)) {
        append_payload(out, p->keys);
        append_payload(out, p->values);
    } else {
        const auto& f = std::get<FcReluNet>(net);
        append_payload(out, f.w1);
        append_payload(out, f.b1);
        append_payload(out, f.w2);
        append_payload(out, f.b2);
    }
    return out;
}

LoadedModel deserialize_model(const std::vector<unsigned char>& bytes) {
    // Header = ASCII lines up to and including the bare "payload" line;
    // everything after that newline is binary.
    HeaderParser hp;
    std::size_t payload_at = 0;
    {
        std::string cur;
        bool found = false;
        std::size_t i = 0;
        for (; i < bytes.size(); ++i) {
            const char ch = char(bytes[i]);
            if (ch == '\n') {
                if (cur == "payload") {
                    found = true;
                    ++i;
                    break;
                }
                hp.lines.push_back(std::move(cur));
                cur.clear();
                if (hp.lines.size() > 1000000)
                    throw FormatError("model header implausibly large");
            } else {
                cur.push_back(ch);
            }
        }
        if (!found) throw FormatError("model header has no payload marker");
        payload_at = i;
    }
    if (hp.lines.empty() || hp.lines[0].rfind(kMagic, 0) != 0)
        throw FormatError("not a model file (bad magic)");

    const auto first = split(hp.next(), ' ');
    if (first.size() != 2 || first[0] != kMagic) throw FormatError("bad model magic line");
    if (first[1] != "v" + std::to_string(kSchemaVersion))
        throw VersionError("model schema " + first[1] + " not supported; this build reads v" +
                           std::to_string(kSchemaVersion));

    const auto arch_line = split(hp.next(), ' ');
    if (arch_line.size() != 2 || arch_line[0] != "arch")
        throw FormatError("missing arch line in model header");
    const std::string arch = arch_line[1];

    LoadedModel out;
    ScoreKind kind;
    if (arch == "prototype") {
        auto expect = [&](std::string_view key) {
            const auto parts = split(hp.next(), ' ');
            if (parts.size() != 2 || parts[0] != key)
                throw FormatError("expected '" + std::string(key) + "' line in model header");
            return parts[1];
        };
        kind.score = ScoreKind::score_from_name(expect("score"));
        kind.p = parse_double(expect("p"));
        kind.eps = parse_double(expect("eps"));
        kind.sigma = parse_double(expect("sigma"));
        kind.validate();
    } else if (arch != "fcrelu") {
        throw FormatError("unknown arch '" + arch + "'");
    }

    while (!hp.done() && (hp.peek().rfind("meta ", 0) == 0 || hp.peek().rfind("augment ", 0) == 0)) {
        const std::string line = hp.next();
        if (line.rfind("meta ", 0) == 0) {
            const std::string rest = line.substr(5);
            const std::size_t sp = rest.find(' ');
            if (sp == std::string::npos) throw FormatError("bad meta line: '" + line + "'");
            out.meta.entries.emplace_back(rest.substr(0, sp), rest.substr(sp + 1));
        } else {
            const auto parts = split(line, ' ');
            if (parts.size() != 6) throw FormatError("bad augment line: '" + line + "'");
            AugmentRecord rec;
            rec.target_class = parse_int_field(parts[1], "augment class");
            rec.eta = parse_double(parts[2]);
            rec.margin = parse_double(parts[3]);
            rec.pre_class = parse_int_field(parts[4], "augment pre-class");
            rec.post_class = parse_int_field(parts[5], "augment post-class");
            out.meta.augments.push_back(rec);
        }
    }

    std::size_t offset = payload_at;
    if (arch == "prototype") {
        PrototypeNet net;
        net.kind = kind;
        net.keys = take_tensor(hp.next(), "keys", bytes, offset);
        net.values = take_tensor(hp.next(), "values", bytes, offset);
        if (net.keys.rows() != net.values.rows())
            throw ShapeError("model file: keys/values row counts differ");
        if (net.keys.rows() == 0) throw ShapeError("model file: zero prototypes");
        out.net = std::move(net);
    } else {
        FcReluNet net;
        net.w1 = take_tensor(hp.next(), "w1", bytes, offset);
        net.b1 = take_tensor(hp.next(), "b1", bytes, offset);
        net.w2 = take_tensor(hp.next(), "w2", bytes, offset);
        net.b2 = take_tensor(hp.next(), "b2", bytes, offset);
        if (net.b1.rows() != 1 || net.b2.rows() != 1 || net.w1.cols() != net.w2.rows() ||
            net.b1.cols() != net.w1.cols() || net.b2.cols() != net.w2.cols())
            throw ShapeError("model file: inconsistent fc layer shapes");
        out.net = std::move(net);
    }
    if (!hp.done()) throw FormatError("unexpected header line: '" + hp.peek() + "'");
    if (offset != bytes.size())
        throw FormatError("model payload has " + std::to_string(bytes.size() - offset) +
                          " trailing bytes");
    std::visit([](const auto& n) {
        for (const Matrix* m : n.params()) m->require_finite("model parameters");
    }, out.net);
    return out;
}

void save_model(const std::string& path, const AnyNet& net, const ModelMeta& meta) {
    write_binary_file(path, serialize_model(net, meta));
}

LoadedModel load_model(const std::string& path) {
    return deserialize_model(read_binary_file(path));
}

} // namespace idw
