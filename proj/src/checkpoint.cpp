#include "editdiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "editdiff/error.hpp"

namespace editdiff {
namespace {

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void text(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string text() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }
    bool match(const char* data, std::size_t n) {
        need(n);
        const bool ok = std::memcmp(bytes_.data() + pos_, data, n) == 0;
        pos_ += n;
        return ok;
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::pair<std::string, std::uint32_t>> config_fields(const DenoiserConfig& c) {
    return {{"residues", static_cast<std::uint32_t>(c.residues)},
            {"embed_dim", static_cast<std::uint32_t>(c.embed_dim)},
            {"num_layers", static_cast<std::uint32_t>(c.num_layers)},
            {"num_heads", static_cast<std::uint32_t>(c.num_heads)},
            {"ff_dim", static_cast<std::uint32_t>(c.ff_dim)},
            {"max_len", static_cast<std::uint32_t>(c.max_len)},
            {"positional", c.positional ? 1u : 0u}};
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const DenoiserParams& params) {
    Writer w;
    w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
    w.u32(kCheckpointVersion);
    const auto fields = config_fields(params.config());
    w.u32(static_cast<std::uint32_t>(fields.size()));
    for (const auto& [name, value] : fields) {
        w.text(name);
        w.u32(value);
    }
    w.u32(static_cast<std::uint32_t>(params.tensors().size()));
    for (const auto& t : params.tensors()) {
        w.text(t.name);
        w.u32(static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) w.u32(d);
        for (double v : params.values(t.name)) w.f32(static_cast<float>(v));
    }
    return w.take();
}

DenoiserParams deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    if (!r.match(kCheckpointMagic, sizeof(kCheckpointMagic))) {
        throw FormatError("checkpoint magic mismatch (expected DPEV)");
    }
    if (const auto version = r.u32(); version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    std::map<std::string, std::uint32_t> fields;
    const std::uint32_t n_fields = r.u32();
    for (std::uint32_t i = 0; i < n_fields; ++i) {
        std::string name = r.text();
        fields[name] = r.u32();
    }
    auto field = [&](const char* name) -> int {
        auto it = fields.find(name);
        if (it == fields.end()) throw FormatError(std::string("checkpoint config lacks field ") + name);
        return static_cast<int>(it->second);
    };
    DenoiserConfig config;
    config.residues = field("residues");
    config.embed_dim = field("embed_dim");
    config.num_layers = field("num_layers");
    config.num_heads = field("num_heads");
    config.ff_dim = field("ff_dim");
    config.max_len = field("max_len");
    config.positional = field("positional") != 0;
    try {
        config.validate();
    } catch (const Error& e) {
        throw FormatError(std::string("checkpoint config invalid: ") + e.what());
    }

    DenoiserParams params = DenoiserParams::zeros(config);
    const std::uint32_t n_tensors = r.u32();
    if (n_tensors != params.tensors().size()) throw FormatError("checkpoint tensor count mismatch");
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::string name = r.text();
        const TensorInfo* info = nullptr;
        try {
            info = &params.tensor(name);
        } catch (const Error&) {
            throw FormatError("checkpoint holds unknown tensor " + name);
        }
        const std::uint32_t rank = r.u32();
        std::vector<std::uint32_t> dims(rank);
        for (auto& d : dims) d = r.u32();
        if (dims != info->dims) throw FormatError("checkpoint shape mismatch for tensor " + name);
        r.need(4 * info->size);
        auto values = params.values(name);
        for (double& v : values) v = static_cast<double>(r.f32());
    }
    if (!r.at_end()) throw FormatError("checkpoint has trailing bytes");
    return params;
}

void save_checkpoint(const DenoiserParams& params, const std::string& path) {
    const auto bytes = serialize_checkpoint(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write checkpoint " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing checkpoint " + path);
}

DenoiserParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace editdiff
