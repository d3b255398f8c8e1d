#include "jcnp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace jcnp {
namespace {

constexpr char kMagic[4] = {'J', 'C', 'N', 'P'};

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw CheckpointError(std::string("checkpoint truncated while reading ") + what +
                                  " at byte " + std::to_string(pos_));
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::string meta_str(const CheckpointMeta& m) {
    return "levels=" + std::to_string(m.levels) + " factor=" + std::to_string(m.factor) +
           " guidance_channels=" + std::to_string(m.guidance_channels);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const JcnpModel<float>& model, std::uint32_t factor) {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(model.spec().levels()));
    w.u32(factor);
    w.u32(static_cast<std::uint32_t>(model.spec().guidance.in_channels));
    const auto params = model.network().parameters();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        w.u32(static_cast<std::uint32_t>(p.name.size()));
        w.raw(p.name.data(), p.name.size());
        w.u32(static_cast<std::uint32_t>(p.tensor.rank()));
        for (std::size_t d : p.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
        for (float v : p.tensor.data()) w.f32(v);
    }
    return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes,
                                  const std::optional<CheckpointMeta>& expected) {
    Reader r(bytes);
    if (r.str(4, "magic") != std::string(kMagic, 4)) throw CheckpointError("not a JCNP checkpoint (bad magic)");
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    CheckpointMeta meta;
    meta.levels = r.u32("levels");
    meta.factor = r.u32("factor");
    meta.guidance_channels = r.u32("guidance channels");
    if (meta.levels > 16 || (meta.guidance_channels != 1 && meta.guidance_channels != 3)) {
        throw CheckpointError("implausible architecture in checkpoint: " + meta_str(meta));
    }
    if (expected && (expected->levels != meta.levels ||
                     expected->guidance_channels != meta.guidance_channels)) {
        throw CheckpointError("checkpoint architecture (" + meta_str(meta) +
                              ") does not match the requested one (" + meta_str(*expected) + ")");
    }

    Checkpoint ckpt{meta, JcnpModel<float>(JcnpSpec::with_levels(static_cast<int>(meta.levels),
                                                                  static_cast<int>(meta.guidance_channels)))};
    auto params = ckpt.model.network().parameters();
    const std::uint32_t count = r.u32("entry count");
    if (count != params.size()) {
        throw CheckpointError("checkpoint holds " + std::to_string(count) + " tensors, architecture has " +
                              std::to_string(params.size()));
    }
    for (auto& p : params) {
        const std::uint32_t len = r.u32("name length");
        const std::string name = r.str(len, "name");
        if (name != p.name) {
            throw CheckpointError("checkpoint entry '" + name + "' where '" + p.name + "' was expected");
        }
        const std::uint32_t rank = r.u32("rank");
        Shape shape;
        for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.u32("dims"));
        if (shape != p.tensor.shape()) {
            throw CheckpointError("entry '" + name + "' has shape " + shape_str(shape) + ", expected " +
                                  shape_str(p.tensor.shape()));
        }
        for (float& v : p.tensor.data()) v = r.f32("values");
    }
    if (!r.at_end()) throw CheckpointError("trailing bytes after last checkpoint entry");
    return ckpt;
}

void save_checkpoint(const JcnpModel<float>& model, std::uint32_t factor,
                     const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(model, factor);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(path.string() + ": write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<CheckpointMeta>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open checkpoint");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    try {
        return deserialize_checkpoint(bytes, expected);
    } catch (const CheckpointError& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
}

}  // namespace jcnp
